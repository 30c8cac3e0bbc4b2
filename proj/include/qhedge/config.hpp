#pragma once

#include <optional>
#include <string>

#include "qhedge/market.hpp"
#include "qhedge/numeric.hpp"

namespace qhedge {

enum class ModelKind { Iid, Pii, Tree };

/// A model file: `model.kind` selects which member is set.
struct ModelConfig {
  ModelKind kind = ModelKind::Iid;
  std::optional<IidModel> iid;
  std::optional<PiiModel> pii;
  std::optional<FiniteTree> tree;
  /// `model.payoff` of a tree model.
  std::optional<Claim> payoff;
};

struct RunInputs {
  ModelConfig model;
  /// Top-level `claim`; a number, "payoff", or a terminal-id -> value map.
  std::optional<Claim> claim;
  std::optional<double> wealth;
};

struct QpConfig {
  Matrix C;
  Vector F;
  Matrix A;
  Vector b;
};

RunInputs parse_config(const std::string& text, const NumericContext& ctx = default_context());
RunInputs load_config(const std::string& path, const NumericContext& ctx = default_context());

/// Claim from a spec string: a number, "payoff" (the model's payoff map) or a
/// JSON object mapping terminal ids to values.
Claim parse_claim_spec(const std::string& spec, const ModelConfig& model);

/// Resolves the claim to use: command-line spec, else config `claim`, else the
/// tree payoff, else the constant 1.
Claim resolve_claim(const RunInputs& inputs, const std::optional<std::string>& spec);

/// `{"qp": {"C": [[..]], "F": [..], "A": [[..]], "b": [..]}}`.
QpConfig parse_qp_config(const std::string& text);
QpConfig load_qp_config(const std::string& path);

std::string read_text_file(const std::string& path);

}  // namespace qhedge
