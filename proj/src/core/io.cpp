#include "ek/io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ek/error.hpp"

namespace ek {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Parse, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::InvalidInput, "cannot write " + path);
  out << text;
}

namespace {

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Parse, e.what());
  }
}

// Runs `body`, turning type errors and content errors into parse errors.
template <class F>
auto as_parse(F&& body) {
  try {
    return body();
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ResourceBound) throw;
    fail(ErrorKind::Parse, e.what());
  }
}

Vtree vtree_from_json(const json& j) {
  if (j.contains("var")) return Vtree::leaf(j.at("var").get<int>());
  return Vtree::join(vtree_from_json(j.at("left")), vtree_from_json(j.at("right")));
}

json vtree_to_json(const Vtree& v, int at) {
  const auto& n = v.node(at);
  if (n.var >= 0) return json{{"var", n.var}};
  return json{{"left", vtree_to_json(v, n.left)}, {"right", vtree_to_json(v, n.right)}};
}

std::vector<double> flatten_table(const json& t) {
  std::vector<double> out;
  for (const auto& row : t)
    for (const auto& e : row) out.push_back(e.get<double>());
  return out;
}

}  // namespace

UnitGraph parse_unit_graph(const std::string& text, bool kernel) {
  const json j = parse_json(text);
  return as_parse([&] {
    Domain d(j.at("domain").get<std::vector<int>>());
    GraphBuilder b(d);
    std::map<long long, int> ids;
    auto child = [&](long long id) {
      const auto it = ids.find(id);
      if (it == ids.end()) fail(ErrorKind::Malformed, "child " + std::to_string(id) + " is not an earlier unit");
      return it->second;
    };
    for (const auto& u : j.at("units")) {
      const long long id = u.at("id").get<long long>();
      if (ids.count(id)) fail(ErrorKind::Malformed, "duplicate unit id " + std::to_string(id));
      const std::string kind = u.at("kind").get<std::string>();
      int built;
      if (kind == "input" && !kernel) {
        built = b.add_input(u.at("var").get<int>(), u.at("weights").get<std::vector<double>>());
      } else if (kind == "kernel_input" && kernel) {
        built = b.add_kernel_input(u.at("var").get<int>(), flatten_table(u.at("table")));
      } else if (kind == "sum" || kind == "product") {
        std::vector<int> kids;
        for (const auto& c : u.at("children")) {
          const long long cid = c.get<long long>();
          if (cid >= id) fail(ErrorKind::Malformed, "unit " + std::to_string(id) + " lists child " + std::to_string(cid) + "; ids must be topologically ordered");
          kids.push_back(child(cid));
        }
        built = kind == "sum" ? b.add_sum(kids, u.at("weights").get<std::vector<double>>()) : b.add_product(kids);
      } else {
        fail(ErrorKind::Malformed, "unit " + std::to_string(id) + " has unsupported kind '" + kind + "'");
      }
      ids[id] = built;
    }
    const double scale = j.value("scale", 1.0);
    UnitGraph g = b.build(child(j.at("root").get<long long>()), scale);
    if (j.contains("vtree")) {
      Vtree v = vtree_from_json(j.at("vtree"));
      if (!g.root_scope().subset_of(v.scope())) fail(ErrorKind::Malformed, "vtree does not cover the circuit scope");
      g.set_vtree(std::move(v));
    }
    return g;
  });
}

std::string unit_graph_to_json(const UnitGraph& g) {
  json units = json::array();
  for (int i = 0; i < g.size(); ++i) {
    const Unit& u = g.unit(i);
    json ju{{"id", i}};
    switch (u.kind) {
      case UnitKind::Input:
        ju["kind"] = "input";
        ju["var"] = u.var;
        ju["weights"] = u.params;
        break;
      case UnitKind::KernelInput: {
        ju["kind"] = "kernel_input";
        ju["var"] = u.var;
        const int c = g.domain().card(u.var);
        json t = json::array();
        for (int a = 0; a < c; ++a)
          t.push_back(std::vector<double>(u.params.begin() + a * c, u.params.begin() + (a + 1) * c));
        ju["table"] = t;
        break;
      }
      case UnitKind::Constant:
        fail(ErrorKind::InvalidInput, "constant units cannot be serialized; fold them into scale first");
      case UnitKind::Sum:
        ju["kind"] = "sum";
        ju["children"] = u.children;
        ju["weights"] = u.params;
        break;
      case UnitKind::Product:
        ju["kind"] = "product";
        ju["children"] = u.children;
        break;
    }
    units.push_back(ju);
  }
  json j{{"domain", g.domain().cards()}, {"root", g.root()}, {"units", units}};
  if (g.scale() != 1.0) j["scale"] = g.scale();
  if (g.vtree() && !g.vtree()->empty()) j["vtree"] = vtree_to_json(*g.vtree(), g.vtree()->root());
  return j.dump();
}

Circuit parse_circuit(const std::string& text) { return Circuit(parse_unit_graph(text, false)); }

Circuit load_circuit(const std::string& path) {
  try {
    return parse_circuit(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Parse) throw;
    fail(ErrorKind::Parse, path + ": " + e.what());
  }
}

void save_circuit(const Circuit& c, const std::string& path) { write_text_file(path, unit_graph_to_json(c)); }

FactorModel parse_factor_model(const std::string& text) {
  const json j = parse_json(text);
  return as_parse([&] {
    FactorModel m{Domain(j.at("domain").get<std::vector<int>>()), {}};
    for (const auto& f : j.at("factors"))
      m.factors.push_back(Factor{f.at("vars").get<std::vector<int>>(), f.at("table").get<std::vector<double>>()});
    m.validate();
    return m;
  });
}

FactorModel load_factor_model(const std::string& path) {
  try {
    return parse_factor_model(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Parse) throw;
    fail(ErrorKind::Parse, path + ": " + e.what());
  }
}

std::string factor_model_to_json(const FactorModel& m) {
  json factors = json::array();
  for (const Factor& f : m.factors) factors.push_back(json{{"vars", f.vars}, {"table", f.table}});
  return json{{"domain", m.domain.cards()}, {"factors", factors}}.dump();
}

}  // namespace ek
