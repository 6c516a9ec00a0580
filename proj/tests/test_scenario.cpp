#include <doctest.h>

#include <string>

#include "gridcert/error.hpp"
#include "gridcert/scenario.hpp"

using namespace gridcert;

namespace {

const std::string kBase = R"(name: tiny
buses:
  - {id: 0, M: 2.0, D: 1.0, p_star: 0.1, dynamics: {type: first_order, tau: 0.5, k: 3.0}}
  - {id: 1, M: 1.0, D: 0.5, p_star: -0.1}
lines:
  - {i: 0, j: 1, b_abs: 1.5}
)";

ScenarioError scenario_error(const std::string& text)
{
    try {
        parse_scenario(text);
    } catch (const ScenarioError& e) {
        return e;
    }
    FAIL("expected a scenario error");
    return ScenarioError(ErrorCode::SchemaError, "", 0, 0);
}

}  // namespace

TEST_CASE("minimal scenario decodes")
{
    const auto sc = parse_scenario(kBase);
    CHECK(sc.name == "tiny");
    CHECK(sc.model.bus_count() == 2);
    CHECK(sc.model.bus(1).dynamics == std::nullopt);
    const auto& fo = std::get<FirstOrder>(*sc.model.bus(0).dynamics);
    CHECK(fo.tau == 0.5);
    CHECK(fo.k.gain == 3.0);
    CHECK(sc.certificates.empty());
    CHECK(sc.source_hash == fnv1a_hex(kBase));
}

TEST_CASE("every dynamics type and analysis option decodes")
{
    const std::string text = R"(name: full
buses:
  - id: 0
    M: 1
    D: 1
    dynamics: {type: second_order, tau_alpha: 0.5, tau_beta: 1, cost: {modulus: 2, cubic: 0.1}, k: {kind: saturation, gain: 2, limit: 1}, output: {kind: tanh, gain: 1.5, limit: 2}}
  - {id: 1, M: 1, D: 1, dynamics: {type: linear_ss, A: [[-1, 0], [1, -2]], B: [1, 0], C: [0, 1]}}
  - {id: 2, M: 1, D: 1, dynamics: {type: droop_lag2, k: 7, tau_alpha: 0.5, tau_beta: 1}}
  - {id: 3, M: 1, D: 1, dynamics: {type: static, k: {kind: deadband, gain: 2, width: 0.1}}}
  - {id: 4, kind: load, p_star: -0.2, V: 1.02}
lines:
  - {i: 0, j: 1, b_abs: 1}
  - {i: 1, j: 2, b_abs: 1}
  - {i: 2, j: 3, b_abs: 1}
  - {i: 3, j: 4, b_abs: 1}
analysis:
  certificates: [small_gain, secant]
  sigma: {2: 30}
  rho_grid: {min: 0.01, max: 100, points: 21, passive_limit: false}
  secant_refinement: four_block
  sweep: {parameter: damping, bus: 0, min: 0.5, max: 2, points: 4}
simulation: {model: dae, horizon: 5, dt: 0.001, sample_every: 3, input: hold, perturbation: {angle_scale: 1.1, theta: {1: 0.2}, omega: {0: 0.1}}}
output: {dir: results, format: csv}
tolerances: {power_flow: 1.0e-11, convergence: 1.0e-7}
)";
    const auto sc = parse_scenario(text);
    const auto& so = std::get<SecondOrder>(*sc.model.bus(0).dynamics);
    CHECK(so.cost.cubic == 0.1);
    CHECK(so.k.kind == MapKind::Saturation);
    REQUIRE(so.output);
    CHECK(so.output->kind == MapKind::Tanh);
    CHECK(std::get<LinearSS>(*sc.model.bus(1).dynamics).A(1, 0) == 1.0);
    CHECK(droop_gain(*sc.model.bus(2).dynamics) == doctest::Approx(7.0));
    CHECK(sc.model.bus(4).kind == BusKind::Load);
    CHECK(sc.model.bus(4).V == 1.02);
    CHECK(sc.certificates.size() == 2);
    CHECK(sc.sigma_overrides.at(0) == std::pair<std::size_t, double>(2, 30.0));
    CHECK(sc.rho_grid.points == 21);
    CHECK_FALSE(sc.rho_grid.include_infinity);
    CHECK(sc.refinement == OutputRefinement::FourBlock);
    REQUIRE(sc.sweep);
    CHECK(sc.sweep->parameter == SweepParameter::Damping);
    CHECK(sc.simulation.model == SimulationModel::Dae);
    CHECK(sc.simulation.policy.sample_every == 3);
    CHECK(sc.simulation.input == InputMode::HoldEquilibrium);
    CHECK(sc.simulation.perturbation.theta_offset.at(1) == 0.2);
    CHECK(sc.output.format == "csv");
    CHECK(sc.tolerances.convergence == 1e-7);
}

TEST_CASE("unknown keys are rejected with their position")
{
    auto e = scenario_error(kBase + "extra: 1\n");
    CHECK(e.code() == ErrorCode::SchemaError);
    CHECK(e.line() == 7);
    CHECK(e.column() == 1);
    CHECK(std::string(e.what()).find("extra") != std::string::npos);

    std::string nested = kBase;
    nested.replace(nested.find("p_star: -0.1"), 12, "p_start: -0.1");
    e = scenario_error(nested);
    CHECK(e.line() == 4);
    CHECK(e.column() == 29);
}

TEST_CASE("malformed values are located")
{
    std::string bad = kBase;
    bad.replace(bad.find("M: 1.0"), 6, "M: abc");
    const auto e = scenario_error(bad);
    CHECK(e.line() == 4);
    CHECK(e.column() == 16);

    const auto syntax = scenario_error("name: [unclosed\n");
    CHECK(syntax.code() == ErrorCode::ParseError);
    CHECK(syntax.line() >= 1);

    const auto type = scenario_error(kBase + "analysis: {certificates: [lyapunov]}\n");
    CHECK(type.line() == 7);
}

TEST_CASE("model invariants are reported")
{
    std::string neg = kBase;
    neg.replace(neg.find("M: 1.0"), 6, "M: -1.0");
    CHECK(scenario_error(neg).line() == 4);

    try {
        parse_scenario(kBase + "  - {i: 1, j: 0, b_abs: 2.0}\n");
        FAIL("expected InvalidModel");
    } catch (const ScenarioError&) {
        FAIL("duplicate lines are a model error, not a schema error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidModel);
    }
}

TEST_CASE("small parsers")
{
    const auto g = parse_rho_grid("0.1,10,5");
    CHECK(g.min == 0.1);
    CHECK(g.max == 10.0);
    CHECK(g.points == 5);
    CHECK(g.values().size() == 6);
    CHECK_THROWS_AS(parse_rho_grid("1,2"), Error);
    CHECK(parse_sweep_parameter("sigma") == SweepParameter::Sigma);
    try {
        parse_sweep_parameter("inertia");
        FAIL("expected UnknownParameter");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownParameter);
    }
    Tolerances t;
    t.set("newton", 1e-12);
    CHECK(t.newton == 1e-12);
    CHECK_THROWS_AS(t.set("bogus", 1.0), Error);
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
}
