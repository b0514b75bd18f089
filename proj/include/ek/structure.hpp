#pragma once

#include <optional>

#include "ek/circuit.hpp"
#include "ek/vtree.hpp"

namespace ek {

enum class Tristate { False, True, Unknown };
const char* to_string(Tristate t);

struct StructureReport {
  bool smooth = false;
  bool decomposable = false;
  Tristate deterministic = Tristate::Unknown;
  std::optional<Vtree> structured;
};

StructureReport check_structural(const UnitGraph& c);

// Structural pattern first, then exhaustive search when the root scope has at
// most 2^20 states; Unknown beyond that.
Tristate check_deterministic(const UnitGraph& c);

// Vtree consistent with every product split of `c`, if one exists.
std::optional<Vtree> extract_vtree(const UnitGraph& c);

bool check_compatible(const UnitGraph& a, const UnitGraph& b);

}  // namespace ek
