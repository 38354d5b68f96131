#pragma once

// JSON model files:
//   {"states": [label...], "rates": [[from, to, w]...], "observables": {name: [value...]}}
// `from`/`to` are state labels or zero-based indices; observables are listed
// in state order.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "neqresponse/markov.hpp"
#include "neqresponse/perturbation.hpp"

namespace neqresponse {

struct Model {
  Generator generator;
  std::map<std::string, Observable> observables;

  /// Throws SchemaError "observable '<name>' not found".
  const Observable& observable(const std::string& name) const;
};

/// Throws ParseError (with line and column for malformed JSON, or the
/// offending entry for bad values such as w <= 0) and SchemaError for
/// missing fields.
Model parse_model(std::string_view text);
Model load_model(const std::filesystem::path& file);

/// Doubles are written with 17 significant digits so that parse_model
/// reproduces every rate and observable value bit for bit.
std::string serialize_model(const Generator& g, const std::map<std::string, Observable>& observables);
void save_model(const Generator& g, const std::map<std::string, Observable>& observables,
                const std::filesystem::path& file);

/// {"V": name-or-vector, "a": real, "b": real,
///  "h": {"kind": "constant", "value": h} | {"kind": "grid", "times": [...], "values": [...]}}
/// "h" may be omitted (zero schedule).
PerturbationSpec parse_perturbation_spec(std::string_view text, const Model& model);
PerturbationSpec load_perturbation_spec(const std::filesystem::path& file, const Model& model);

}  // namespace neqresponse
