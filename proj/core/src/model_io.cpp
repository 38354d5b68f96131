#include "neqresponse/model_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "neqresponse/error.hpp"

namespace neqresponse {
namespace {

using nlohmann::json;

constexpr std::string_view kModule = "model_io";

[[noreturn]] void fail(ErrorKind kind, const std::string& message) { throw Error(kind, kModule, message); }

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& ex) {
    // Byte offset to line/column.
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < ex.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::ostringstream os;
    os << what << " line " << line << ", column " << column << " (offset " << ex.byte << "): malformed JSON";
    fail(ErrorKind::ParseError, os.str());
  }
}

const json& field(const json& object, const char* name, std::string_view where) {
  if (!object.is_object()) fail(ErrorKind::SchemaError, std::string(where) + " must be an object");
  const auto it = object.find(name);
  if (it == object.end()) fail(ErrorKind::SchemaError, std::string(where) + " is missing field '" + name + "'");
  return *it;
}

double number(const json& value, const std::string& where) {
  if (!value.is_number()) fail(ErrorKind::ParseError, where + " is not a number");
  const double x = value.get<double>();
  if (!std::isfinite(x)) fail(ErrorKind::ParseError, where + " is not finite");
  return x;
}

std::vector<double> number_array(const json& value, const std::string& where) {
  if (!value.is_array()) fail(ErrorKind::ParseError, where + " is not an array");
  std::vector<double> out;
  out.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) out.push_back(number(value[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::size_t state_ref(const json& value, const StateSpace& space, const std::string& where) {
  if (value.is_string()) {
    const auto found = space.find(value.get<std::string>());
    if (!found) fail(ErrorKind::ParseError, where + " names unknown state '" + value.get<std::string>() + "'");
    return *found;
  }
  if (value.is_number_unsigned() || (value.is_number_integer() && value.get<long long>() >= 0)) {
    const auto index = value.get<std::size_t>();
    if (index >= space.size()) fail(ErrorKind::ParseError, where + " state index out of range");
    return index;
  }
  fail(ErrorKind::ParseError, where + " must be a state label or index");
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::FileNotFound, kModule, "cannot open '" + file.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::IoError, kModule, "error reading '" + file.string() + "'");
  return os.str();
}

void write_number(std::ostream& os, double x) { os << std::setprecision(17) << x; }

}  // namespace

const Observable& Model::observable(const std::string& name) const {
  const auto it = observables.find(name);
  if (it == observables.end()) fail(ErrorKind::SchemaError, "observable '" + name + "' not found");
  return it->second;
}

Model parse_model(std::string_view text) {
  const json doc = parse_json(text, "model");
  const json& states = field(doc, "states", "model");
  if (!states.is_array()) fail(ErrorKind::ParseError, "'states' is not an array");
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!states[i].is_string()) fail(ErrorKind::ParseError, "states[" + std::to_string(i) + "] is not a string");
    labels.push_back(states[i].get<std::string>());
  }
  StateSpace space(std::move(labels));

  const json& rates = field(doc, "rates", "model");
  if (!rates.is_array()) fail(ErrorKind::ParseError, "'rates' is not an array");
  std::vector<Transition> transitions;
  transitions.reserve(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const std::string where = "rates[" + std::to_string(i) + "]";
    const json& entry = rates[i];
    if (!entry.is_array() || entry.size() != 3) fail(ErrorKind::ParseError, where + " must be [from, to, w]");
    const double w = number(entry[2], where + " rate");
    if (!(w > 0.0)) fail(ErrorKind::ParseError, where + " has nonpositive rate");
    transitions.push_back({state_ref(entry[0], space, where), state_ref(entry[1], space, where), w});
  }

  Model model{Generator::build(std::move(space), transitions), {}};
  if (const auto it = doc.find("observables"); it != doc.end()) {
    if (!it->is_object()) fail(ErrorKind::ParseError, "'observables' is not an object");
    for (const auto& [name, values] : it->items()) {
      auto v = number_array(values, "observables." + name);
      if (v.size() != model.generator.size()) {
        fail(ErrorKind::DimensionMismatch, "observable '" + name + "' has " + std::to_string(v.size()) +
                                               " values for " + std::to_string(model.generator.size()) + " states");
      }
      model.observables.emplace(name, Observable(Eigen::Map<const Vector>(v.data(), Eigen::Index(v.size()))));
    }
  }
  return model;
}

Model load_model(const std::filesystem::path& file) { return parse_model(read_file(file)); }

std::string serialize_model(const Generator& g, const std::map<std::string, Observable>& observables) {
  std::ostringstream os;
  os << "{\n  \"states\": [";
  for (std::size_t i = 0; i < g.size(); ++i) os << (i ? ", " : "") << json(g.space().label(i)).dump();
  os << "],\n  \"rates\": [";
  bool first = true;
  for (const auto& t : g.transitions()) {
    os << (first ? "\n    [" : ",\n    [") << json(g.space().label(t.from)).dump() << ", "
       << json(g.space().label(t.to)).dump() << ", ";
    write_number(os, t.rate);
    os << "]";
    first = false;
  }
  os << "\n  ],\n  \"observables\": {";
  first = true;
  for (const auto& [name, values] : observables) {
    if (values.size() != g.size()) fail(ErrorKind::DimensionMismatch, "observable '" + name + "' dimension");
    os << (first ? "\n    " : ",\n    ") << json(name).dump() << ": [";
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) os << ", ";
      write_number(os, values[i]);
    }
    os << "]";
    first = false;
  }
  os << "\n  }\n}\n";
  return os.str();
}

void save_model(const Generator& g, const std::map<std::string, Observable>& observables,
                const std::filesystem::path& file) {
  const std::string text = serialize_model(g, observables);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, kModule, "cannot write '" + file.string() + "'");
  out << text;
  if (!out) throw Error(ErrorKind::IoError, kModule, "error writing '" + file.string() + "'");
}

PerturbationSpec parse_perturbation_spec(std::string_view text, const Model& model) {
  const json doc = parse_json(text, "perturbation spec");
  const json& v = field(doc, "V", "perturbation spec");
  Observable potential = Observable::constant(model.generator.size(), 0.0);
  if (v.is_string()) {
    potential = model.observable(v.get<std::string>());
  } else {
    const auto values = number_array(v, "V");
    if (values.size() != model.generator.size()) fail(ErrorKind::DimensionMismatch, "V has the wrong length");
    potential = Observable(Eigen::Map<const Vector>(values.data(), Eigen::Index(values.size())));
  }
  const double a = number(field(doc, "a", "perturbation spec"), "a");
  const double b = number(field(doc, "b", "perturbation spec"), "b");
  AmplitudeSchedule schedule = AmplitudeSchedule::constant(0.0);
  if (const auto it = doc.find("h"); it != doc.end()) {
    const json& kind = field(*it, "kind", "h");
    if (!kind.is_string()) fail(ErrorKind::ParseError, "h.kind is not a string");
    if (kind == "constant") {
      schedule = AmplitudeSchedule::constant(number(field(*it, "value", "h"), "h.value"));
    } else if (kind == "grid") {
      schedule = AmplitudeSchedule::grid(number_array(field(*it, "times", "h"), "h.times"),
                                         number_array(field(*it, "values", "h"), "h.values"));
    } else {
      fail(ErrorKind::SchemaError, "h.kind must be 'constant' or 'grid'");
    }
  }
  return PerturbationSpec{std::move(potential), a, b, std::move(schedule)};
}

PerturbationSpec load_perturbation_spec(const std::filesystem::path& file, const Model& model) {
  return parse_perturbation_spec(read_file(file), model);
}

}  // namespace neqresponse
