#pragma once

#include <string>

#include "ek/circuit.hpp"
#include "ek/factor_model.hpp"
#include "ek/vtree.hpp"

namespace ek {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Unit-graph JSON shared by circuits and kernel circuits. `kernel` selects
// which leaf kind is accepted ("input" or "kernel_input"). Any problem with
// the text is reported as ErrorKind::Parse.
UnitGraph parse_unit_graph(const std::string& text, bool kernel);
std::string unit_graph_to_json(const UnitGraph& g);

Circuit parse_circuit(const std::string& text);
Circuit load_circuit(const std::string& path);
void save_circuit(const Circuit& c, const std::string& path);

FactorModel parse_factor_model(const std::string& text);
FactorModel load_factor_model(const std::string& path);
std::string factor_model_to_json(const FactorModel& m);

}  // namespace ek
