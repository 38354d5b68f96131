#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "neqresponse/error.hpp"
#include "neqresponse/model_io.hpp"
#include "support.hpp"

using namespace neqresponse;
using namespace testing_support;

namespace {

Error error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an Error");
  return Error(ErrorKind::InvalidArgument, "test", "unreachable");
}

bool same_bits(double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; }

bool contains(const std::string& text, const std::string& part) { return text.find(part) != std::string::npos; }

const char* kThreeState = R"({
  "states": ["a", "b", "c"],
  "rates": [["a", "b", 2.0], ["b", "c", 1.5], [2, 0, 0.5], ["b", "a", 1.0]],
  "observables": {"V": [1, 0, -1], "Q": [0.5, 0.25, 0.125]}
})";

}  // namespace

TEST_SUITE("model_io") {
  TEST_CASE("parse a model with labels and indices") {
    const Model m = parse_model(kThreeState);
    CHECK(m.generator.size() == 3);
    CHECK(m.generator.space().label(1) == "b");
    CHECK(m.generator.rate(0, 1) == 2.0);
    CHECK(m.generator.rate(2, 0) == 0.5);
    CHECK(m.generator.rate(0, 2) == 0.0);
    CHECK(m.observable("V")[2] == -1.0);
    CHECK(m.observables.size() == 2);
    const Error missing = error_of([&] { m.observable("W"); });
    CHECK(missing.kind() == ErrorKind::SchemaError);
    CHECK(std::string(missing.what()) == "SchemaError: observable 'W' not found");
  }

  TEST_CASE("random six-state model round-trips bit for bit") {
    std::mt19937_64 rng(71);
    const Generator g = random_sparse_generator(6, rng, 0.5);
    std::map<std::string, Observable> obs{{"V", random_observable(6, rng)}, {"Q", random_observable(6, rng, -1e-7, 1e9)}};
    const Model back = parse_model(serialize_model(g, obs));
    REQUIRE(back.generator.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(back.generator.space().label(i) == g.space().label(i));
    CHECK(back.generator.transitions().size() == g.transitions().size());
    for (const auto& t : g.transitions()) CHECK(same_bits(back.generator.rate(t.from, t.to), t.rate));
    for (const auto& [name, v] : obs) {
      for (std::size_t i = 0; i < 6; ++i) CHECK(same_bits(back.observable(name)[i], v[i]));
    }

    const auto dir = std::filesystem::temp_directory_path() / "neqresponse_model_io_test";
    std::filesystem::create_directories(dir);
    save_model(g, obs, dir / "model.json");
    const Model loaded = load_model(dir / "model.json");
    for (const auto& t : g.transitions()) CHECK(same_bits(loaded.generator.rate(t.from, t.to), t.rate));
    CHECK(error_of([&] { load_model(dir / "absent.json"); }).kind() == ErrorKind::FileNotFound);
    CHECK(error_of([&] { save_model(g, obs, dir / "no" / "such" / "dir.json"); }).kind() == ErrorKind::IoError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("labels needing escapes survive the round trip") {
    const std::vector<Transition> ts{{0, 1, 1.0}, {1, 0, 2.0}};
    const Generator g = Generator::build(StateSpace({"quote\"d", "back\\slash"}), ts);
    const Model back = parse_model(serialize_model(g, {}));
    CHECK(back.generator.space().label(0) == "quote\"d");
    CHECK(back.generator.space().label(1) == "back\\slash");
  }

  TEST_CASE("malformed input") {
    const Error syntax = error_of([] { parse_model("{\n  \"states\": [\"a\",\n  ]\n}"); });
    CHECK(syntax.kind() == ErrorKind::ParseError);
    CHECK(contains(syntax.what(), "line 3"));
    CHECK(contains(syntax.what(), "column"));

    const Error nonpositive = error_of([] {
      parse_model(R"({"states": ["a", "b"], "rates": [["a", "b", 1.0], ["b", "a", 0.0]]})");
    });
    CHECK(nonpositive.kind() == ErrorKind::ParseError);
    CHECK(contains(nonpositive.what(), "rates[1]"));
    CHECK(error_of([] { parse_model(R"({"states": ["a", "b"], "rates": [["a", "b", -2], ["b", "a", 1]]})"); }).kind() ==
          ErrorKind::ParseError);

    const Error no_rates = error_of([] { parse_model(R"({"states": ["a", "b"]})"); });
    CHECK(no_rates.kind() == ErrorKind::SchemaError);
    CHECK(contains(no_rates.what(), "missing field 'rates'"));
    CHECK(error_of([] { parse_model(R"({"rates": []})"); }).kind() == ErrorKind::SchemaError);

    CHECK(error_of([] { parse_model(R"({"states": ["a", "b"], "rates": [["a", "z", 1], ["b", "a", 1]]})"); }).kind() ==
          ErrorKind::ParseError);
    CHECK(error_of([] { parse_model(R"({"states": ["a", "b"], "rates": [["a", 5, 1], ["b", "a", 1]]})"); }).kind() ==
          ErrorKind::ParseError);
    CHECK(error_of([] {
            parse_model(R"({"states": ["a", "b"], "rates": [["a", "b", 1], ["b", "a", 1]], "observables": {"V": [1]}})");
          }).kind() == ErrorKind::DimensionMismatch);
    // Structural problems are reported by the generator itself.
    CHECK(error_of([] { parse_model(R"({"states": ["a", "b"], "rates": [["a", "b", 1]]})"); }).kind() ==
          ErrorKind::NotIrreducible);
  }

  TEST_CASE("perturbation specs") {
    const Model m = parse_model(kThreeState);
    const PerturbationSpec named = parse_perturbation_spec(R"({"V": "V", "a": 0.25, "b": 0.75,
        "h": {"kind": "constant", "value": 0.1}})", m);
    CHECK(named.potential[0] == 1.0);
    CHECK(named.a == 0.25);
    CHECK(named.b == 0.75);
    CHECK(named.schedule.value(3.0) == 0.1);

    const PerturbationSpec vec = parse_perturbation_spec(R"({"V": [0, 2, 4], "a": 0, "b": 1,
        "h": {"kind": "grid", "times": [0, 1, 2], "values": [0, 1, 0]}})", m);
    CHECK(vec.potential[2] == 4.0);
    CHECK(vec.schedule.value(1.0) == doctest::Approx(1.0));
    CHECK(vec.schedule.horizon() == 2.0);

    const PerturbationSpec quiet = parse_perturbation_spec(R"({"V": "Q", "a": 1, "b": 0})", m);
    CHECK(quiet.schedule.is_identically_zero());

    const Error unknown = error_of([&] { parse_perturbation_spec(R"({"V": "M", "a": 1, "b": 0})", m); });
    CHECK(std::string(unknown.what()) == "SchemaError: observable 'M' not found");
    CHECK(error_of([&] { parse_perturbation_spec(R"({"V": "V", "b": 0})", m); }).kind() == ErrorKind::SchemaError);
    CHECK(error_of([&] { parse_perturbation_spec(R"({"V": [1, 2], "a": 1, "b": 0})", m); }).kind() ==
          ErrorKind::DimensionMismatch);
    CHECK(error_of([&] {
            parse_perturbation_spec(R"({"V": "V", "a": 1, "b": 0, "h": {"kind": "pulse"}})", m);
          }).kind() == ErrorKind::SchemaError);
    CHECK(error_of([&] { parse_perturbation_spec(R"({"V": "V", "a": "x", "b": 0})", m); }).kind() ==
          ErrorKind::ParseError);
  }
}
