#include "qhedge/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "qhedge/errors.hpp"

namespace qhedge {

namespace {

using json = nlohmann::json;

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw InvalidInput(where + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) {
    throw InvalidInput(where + ": expected a number");
  }
  return j.get<double>();
}

Vector vector_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) {
    throw InvalidInput(where + ": expected a non-empty list of numbers");
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number(j[i], where);
  }
  return v;
}

Matrix matrix_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) {
    throw InvalidInput(where + ": expected a non-empty list of rows");
  }
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols || cols == 0) {
      throw InvalidInput(where + ": rows must be non-empty lists of equal length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], where);
    }
  }
  return m;
}

Claim claim_map(const json& j, const std::string& where) {
  std::map<std::string, double> values;
  for (auto it = j.begin(); it != j.end(); ++it) {
    values[it.key()] = number(it.value(), where + "." + it.key());
  }
  return Claim::payoff(std::move(values));
}

ModelConfig parse_model(const json& m, const NumericContext& ctx) {
  ModelConfig out;
  const json& kind = field(m, "kind", "model");
  if (!kind.is_string()) {
    throw InvalidInput("model.kind must be a string");
  }
  const std::string k = kind.get<std::string>();
  if (k == "iid") {
    out.kind = ModelKind::Iid;
    const json& t = field(m, "T", "model");
    if (!t.is_number_integer()) {
      throw InvalidInput("model.T must be an integer");
    }
    out.iid.emplace(vector_of(field(m, "mu", "model"), "model.mu"),
                    matrix_of(field(m, "sigma", "model"), "model.sigma"), t.get<int>(), ctx);
  } else if (k == "pii") {
    out.kind = ModelKind::Pii;
    const json& segs = field(m, "segments", "model");
    if (!segs.is_array()) {
      throw InvalidInput("model.segments must be a list");
    }
    std::vector<PiiSegment> list;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const std::string where = "model.segments[" + std::to_string(i) + "]";
      list.push_back({number(field(segs[i], "duration", where), where + ".duration"),
                      vector_of(field(segs[i], "b", where), where + ".b"),
                      matrix_of(field(segs[i], "c", where), where + ".c")});
    }
    out.pii.emplace(std::move(list), ctx);
  } else if (k == "tree") {
    out.kind = ModelKind::Tree;
    const json& nodes = field(m, "nodes", "model");
    if (!nodes.is_array()) {
      throw InvalidInput("model.nodes must be a list");
    }
    std::vector<FiniteTree::NodeSpec> specs;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const json& n = nodes[i];
      const std::string where = "model.nodes[" + std::to_string(i) + "]";
      FiniteTree::NodeSpec s;
      const json& id = field(n, "id", where);
      if (!id.is_string()) {
        throw InvalidInput(where + ".id must be a string");
      }
      s.id = id.get<std::string>();
      const json& time = field(n, "time", where);
      if (!time.is_number_integer()) {
        throw InvalidInput(where + ".time must be an integer");
      }
      s.time = time.get<int>();
      s.prices = vector_of(field(n, "prices", where), where + ".prices");
      if (n.contains("branches")) {
        const json& br = n.at("branches");
        if (!br.is_array()) {
          throw InvalidInput(where + ".branches must be a list");
        }
        for (const json& b : br) {
          const json& child = field(b, "child", where + ".branches");
          if (!child.is_string()) {
            throw InvalidInput(where + ".branches.child must be a string");
          }
          s.branches.emplace_back(number(field(b, "prob", where + ".branches"), where),
                                  child.get<std::string>());
        }
      }
      specs.push_back(std::move(s));
    }
    const json& root = field(m, "root", "model");
    if (!root.is_string()) {
      throw InvalidInput("model.root must be a string");
    }
    out.tree.emplace(FiniteTree::build(specs, root.get<std::string>(), ctx));
    if (m.contains("payoff")) {
      if (!m.at("payoff").is_object()) {
        throw InvalidInput("model.payoff must map terminal ids to values");
      }
      out.payoff = claim_map(m.at("payoff"), "model.payoff");
    }
  } else {
    throw InvalidInput("model.kind must be one of iid, pii, tree; got '" + k + "'");
  }
  return out;
}

Claim claim_from_json(const json& j, const ModelConfig& model) {
  if (j.is_number()) {
    return Claim::constant(j.get<double>());
  }
  if (j.is_string() && j.get<std::string>() == "payoff") {
    if (!model.payoff) {
      throw InvalidInput("claim 'payoff' requires a tree model with a payoff map");
    }
    return *model.payoff;
  }
  if (j.is_object()) {
    return claim_map(j, "claim");
  }
  throw InvalidInput("claim must be a number, \"payoff\" or a map of terminal ids to values");
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidInput("cannot open '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunInputs parse_config(const std::string& text, const NumericContext& ctx) {
  const json root = parse_json(text);
  RunInputs out;
  out.model = parse_model(field(root, "model", "config"), ctx);
  if (root.contains("claim")) {
    out.claim = claim_from_json(root.at("claim"), out.model);
  }
  if (root.contains("wealth")) {
    out.wealth = number(root.at("wealth"), "wealth");
  }
  return out;
}

RunInputs load_config(const std::string& path, const NumericContext& ctx) {
  return parse_config(read_text_file(path), ctx);
}

Claim parse_claim_spec(const std::string& spec, const ModelConfig& model) {
  if (spec == "payoff") {
    return claim_from_json(json("payoff"), model);
  }
  json j;
  try {
    j = json::parse(spec);
  } catch (const json::parse_error&) {
    throw InvalidInput("claim spec '" + spec + "' is not a number, \"payoff\" or a JSON map");
  }
  return claim_from_json(j, model);
}

Claim resolve_claim(const RunInputs& inputs, const std::optional<std::string>& spec) {
  if (spec) {
    return parse_claim_spec(*spec, inputs.model);
  }
  if (inputs.claim) {
    return *inputs.claim;
  }
  if (inputs.model.payoff) {
    return *inputs.model.payoff;
  }
  return Claim::constant(1.0);
}

QpConfig parse_qp_config(const std::string& text) {
  const json root = parse_json(text);
  const json& qp = field(root, "qp", "config");
  return {matrix_of(field(qp, "C", "qp"), "qp.C"), vector_of(field(qp, "F", "qp"), "qp.F"),
          matrix_of(field(qp, "A", "qp"), "qp.A"), vector_of(field(qp, "b", "qp"), "qp.b")};
}

QpConfig load_qp_config(const std::string& path) { return parse_qp_config(read_text_file(path)); }

}  // namespace qhedge
