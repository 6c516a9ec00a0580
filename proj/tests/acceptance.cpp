// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "gridcert/certificates.hpp"
#include "gridcert/commands.hpp"
#include "gridcert/equilibrium.hpp"
#include "gridcert/error.hpp"
#include "gridcert/format.hpp"
#include "gridcert/lti.hpp"
#include "gridcert/scenario.hpp"
#include "gridcert/simulator.hpp"
#include "support.hpp"

using namespace gridcert;
using namespace testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string scenario_path(const char* name) { return std::string(GRIDCERT_SCENARIO_DIR) + "/" + name; }

std::string num(double v) { return format_double(round_significant(v, 4)); }

SecondOrder second_order(double rho_k, double rho_c, std::optional<double> rho_h = std::nullopt)
{
    SecondOrder s;
    s.tau_alpha = 0.5;
    s.tau_beta = 1.0;
    s.cost = {rho_c, 0.0};
    s.k = linear_map(rho_k);
    if (rho_h) s.output = linear_map(*rho_h);
    return s;
}

NetworkModel single_bus(double D, GenerationDynamics dyn)
{
    return NetworkModel({generator(1.0, D, 0.0, std::move(dyn))}, {});
}

// 1. secant factors
Outcome secant_constants()
{
    const double f2 = secant_factor(2), f3 = secant_factor(3), f4 = secant_factor(4);
    Outcome o;
    o.pass = std::abs(f2 - 8.0) <= 1e-12 && std::abs(f3 - 4.0) <= 1e-12 && f4 >= 2.88 && f4 <= 2.89;
    o.detail = "n_P=2: " + format_double(f2) + ", n_P=3: " + format_double(f3) + ", n_P=4: " + format_double(f4);
    return o;
}

// 2. worked-example inequalities at +-1e-6 around each boundary
Outcome worked_examples()
{
    int checks = 0, wrong = 0;
    auto expect = [&](bool certified, bool below) {
        ++checks;
        if (certified != below) ++wrong;
    };
    const double eps = 1e-6;
    for (double D : {0.5, 0.75, 1.6}) {
        for (double d : {-eps, eps}) {
            const bool below = d < 0;
            expect(secant_check(single_bus(D, FirstOrder{0.5, deadband(8 * D + d, 0.01)})).all_pass(), below);
            expect(small_gain_check(single_bus(D, FirstOrder{0.5, deadband(D + d, 0.01)})).all_pass(), below);
            for (double rc : {0.5, 2.0}) {
                expect(small_gain_check(single_bus(D, second_order(rc * D + d, rc))).all_pass(), below);
                expect(secant_check(single_bus(D, second_order(4 * rc * D + d, rc))).all_pass(), below);
                const double rh = 1.5;
                const double b3 = 4 * rc * D;
                expect(secant_check(single_bus(D, second_order((b3 + d) / rh, rc, rh))).all_pass(), below);
                const double b4 = 2.8854 * rc * D;  // (sec pi/5)^5 to four decimals
                const double f4 = secant_factor(4) * rc * D;
                const auto four = single_bus(D, second_order((f4 + d) / rh, rc, rh));
                expect(secant_check(four, OutputRefinement::FourBlock).all_pass(), below);
                expect(std::abs(f4 - b4) < 1e-4 * rc * D, true);
            }
        }
    }
    return {wrong == 0, std::to_string(checks - wrong) + "/" + std::to_string(checks) + " threshold checks"};
}

// 3. maximum droop gain table on the shipped four-area scenario
Outcome table2()
{
    const double expected[] = {24.3, 20.0, 16.9, 15.2, 14.3, 13.9};
    const auto out = std::filesystem::temp_directory_path() / "gridcert_acceptance";
    std::filesystem::create_directories(out);
    CommandOptions opt;
    opt.scenario = scenario_path("four_area.yaml");
    opt.out_dir = out.string();
    const auto r = cmd_table2(opt);
    if (r.exit_code != 0 || !r.report) return {false, "table2 command failed: " + r.error};
    const auto& cols = r.report->tables.at(0)["columns"];
    std::vector<double> k;
    bool within = cols.size() == 6;
    double worst = 0.0;
    for (std::size_t c = 0; c < cols.size() && c < 6; ++c) {
        k.push_back(decode_number(cols[c]["k_max"]["value"]));
        const double rel = std::abs(k.back() / expected[c] - 1.0);
        worst = std::max(worst, rel);
        within = within && rel <= 0.05;
    }
    // plateau: larger coupling bounds up to the zero-feedthrough limit
    const auto sc = load_scenario(opt.scenario);
    const auto& spec = *sc.table2;
    for (double s : {100.0, 1e3, 1e9}) {
        k.push_back(max_droop_search(sc.model, spec.bus, study_sigma(sc.model, spec.bus, s), spec.lo, spec.hi,
                                     sc.rho_grid, spec.tol)
                        .k_max);
    }
    bool monotone = true;
    for (std::size_t c = 1; c < k.size(); ++c) monotone = monotone && k[c] <= k[c - 1];
    const double k30 = k[5], k_inf = k.back();
    const bool plateau = std::abs(k30 - k_inf) <= 0.5 && k[7] - k_inf <= spec.tol;
    std::string row;
    for (std::size_t c = 0; c < 6; ++c) row += (c ? ", " : "") + num(k[c]);
    return {within && monotone && plateau, "k_max = (" + row + "), worst deviation " + num(100 * worst) +
                                               "%, limit " + num(k_inf) + (monotone ? ", monotone" : ", NOT monotone")};
}

// 4. coupling matrix PSD on random graphs
Outcome lemma3_suite()
{
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(2, 30);
    double worst = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = size(rng);
        std::vector<BusParams> buses(n, generator(1, 1));
        std::uniform_int_distribution<std::size_t> chords(0, 2 * n);
        const NetworkModel m(buses, random_connected_lines(n, chords(rng), rng, 0.05, 10.0));
        worst = std::min(worst, lemma3_psd_check(m, coupling_bound_sigma(m)).min_eig);
    }
    return {worst >= -1e-10, "smallest eigenvalue over 100 graphs " + format_double(worst)};
}

// 5. positive-real test versus a dense frequency sweep
Outcome pr_oracle()
{
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> mag(0.05, 5.0);
    std::uniform_real_distribution<double> zeta(0.08, 1.0);
    std::uniform_int_distribution<int> degree(1, 8);
    std::normal_distribution<double> n01;
    int compared = 0, agree = 0, pr_count = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const int kind = trial % 10;  // 0-3 random, 4-7 constructed passive, 8 unstable, 9 integrator
        const int deg = degree(rng);
        std::vector<std::complex<double>> poles;
        if (kind == 8) poles.push_back({0.5 * mag(rng), 0.0});
        if (kind == 9) poles.push_back({0.0, 0.0});
        while (static_cast<int>(poles.size()) < deg) {
            if (deg - static_cast<int>(poles.size()) >= 2 && n01(rng) > 0) {
                const double w = mag(rng), z = zeta(rng);
                const double re = -z * w, im = w * std::sqrt(1 - z * z);
                poles.push_back({re, im});
                poles.push_back({re, -im});
            } else {
                poles.push_back({-mag(rng), 0.0});
            }
        }
        Polynomial den = Polynomial::from_roots(poles);
        Polynomial numer;
        if (kind >= 4 && kind <= 7) {
            // sum of positive first-order terms plus a feedthrough, then a random perturbation
            numer = Polynomial({0.0});
            Polynomial d{1.0};
            for (int t = 0; t < deg; ++t) {
                const Polynomial term = Polynomial::from_roots({{-mag(rng), 0.0}});
                numer = numer * term + mag(rng) * d;
                d = d * term;
            }
            numer = numer + (kind % 2 ? 0.0 : mag(rng)) * d;
            den = d;
            std::vector<double> noise(den.coeffs().size());
            for (auto& x : noise) x = 0.15 * n01(rng) * mag(rng);
            numer = numer + Polynomial(noise) * Polynomial({kind % 2 ? 0.0 : 1.0});
        } else {
            std::vector<double> c(static_cast<std::size_t>(deg) + (trial % 2 ? 0 : 1));
            for (auto& x : c) x = n01(rng);
            c.back() = std::abs(c.back()) + 0.1;
            numer = Polynomial(c);
        }
        const auto v = is_positive_real({numer, den});
        if (std::abs(v.margin) <= 1e-6) continue;
        ++compared;
        // oracle: Routh-Hurwitz on the non-origin poles, origin residue, then the sweep
        const auto z = den.zero_root_multiplicity();
        bool oracle = routh_hurwitz_stable(den.deflate_zero_roots(z)) && z <= 1;
        if (z == 1) oracle = oracle && numer(0.0) / den.deflate_zero_roots(1)(0.0) > 0.0;
        oracle = oracle && numer.degree() <= den.degree() + 1 && sweep_min_real(numer, den) >= 0.0;
        agree += oracle == v.is_pr;
        pr_count += oracle;
    }
    return {compared > 0 && agree == compared && compared >= 250,
            std::to_string(agree) + "/" + std::to_string(compared) + " decided cases agree (" +
                std::to_string(pr_count) + " positive real)"};
}

// 6. passivity identity with held inputs
Outcome passivity_identity()
{
    const auto sc = load_scenario(scenario_path("three_bus_dae.yaml"));
    const auto& m = sc.model;
    const auto eq = solve_equilibrium_dae(m);
    const auto x0 = initial_from_equilibrium(m, eq, sc.simulation.perturbation);
    auto run = [&](double dt) {
        StepPolicy p;
        p.dt = dt;
        return passivity_identity_check(m, simulate_dae(m, x0, 5.0, p, eq, InputMode::HoldEquilibrium), eq);
    };
    const double fine = run(1e-3);
    const double r1 = run(0.1), r2 = run(0.05), r3 = run(0.025);
    const double o1 = std::log2(r1 / r2), o2 = std::log2(r2 / r3);
    const bool second = std::abs(o1 - 2.0) < 0.3 && std::abs(o2 - 2.0) < 0.3;
    return {fine < 1e-5 && second,
            "residual " + num(fine) + " at dt = 1e-3, observed orders " + num(o1) + ", " + num(o2)};
}

// 7. equilibrium back-substitution and tree closed form
Outcome equilibrium_consistency()
{
    const auto m = load_scenario(scenario_path("four_area.yaml")).model;
    const auto f = solve_sync_frequency_linear(m);
    Eigen::VectorXd c = setpoints(m);
    for (std::size_t i = 0; i < m.bus_count(); ++i) c(i) -= (m.bus(i).D + droop_gain(*m.bus(i).dynamics)) * f.omega_star;
    const auto pf = solve_power_flow(m, c);
    const Eigen::VectorXd p = active_power(m, pf.theta);
    double residual = 0.0;
    for (std::size_t i = 0; i < m.bus_count(); ++i) {
        const auto& ss = std::get<LinearSS>(*m.bus(i).dynamics);
        const Eigen::VectorXd xi = ss.A.partialPivLu().solve(ss.B * f.omega_star);
        residual = std::max(residual, (ss.A * xi - ss.B * f.omega_star).cwiseAbs().maxCoeff());
        const double swing = m.bus(i).p_star - m.bus(i).D * f.omega_star + (ss.C * xi)(0) - p(static_cast<Eigen::Index>(i));
        residual = std::max(residual, std::abs(swing));
    }

    double tree_gap = 0.0;
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int trees = 0;
    auto compare = [&](const NetworkModel& t, const Eigen::VectorXd& rhs) {
        const auto closed = tree_feasibility_test(t, rhs);
        if (!closed.feasible_guarantee) return;
        tree_gap = std::max(tree_gap, (solve_power_flow(t, rhs).eta - *closed.eta_bar).cwiseAbs().maxCoeff());
        ++trees;
    };
    {
        const auto t = load_scenario(scenario_path("tree_demo.yaml")).model;
        const auto eq = solve_equilibrium_dae(t);
        Eigen::VectorXd rhs = setpoints(t);
        for (std::size_t k = 0; k < t.generators().size(); ++k) {
            const auto g = t.generators()[k];
            rhs(static_cast<Eigen::Index>(g)) += -t.bus(g).D * eq.omega_star + eq.u_bar(static_cast<Eigen::Index>(k));
        }
        compare(t, rhs);
    }
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 12);
        std::vector<BusParams> buses(n, generator(1, 1));
        const NetworkModel t(buses, random_connected_lines(n, 0, rng, 1.0, 3.0));
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
        for (auto& x : rhs) x = 0.5 * u(rng);
        rhs.array() -= rhs.mean();
        compare(t, rhs);
    }
    return {residual < 1e-10 && tree_gap < 1e-10 && trees >= 20,
            "four-area residual " + format_double(residual) + ", tree gap " + format_double(tree_gap) + " over " +
                std::to_string(trees) + " trees"};
}

// 8. certified scenarios converge
struct Candidate {
    NetworkModel model;
    bool dae;
};

GenerationDynamics random_map_block(std::mt19937_64& rng, double D)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double fraction = 0.2 + 0.7 * u(rng);
    switch (static_cast<int>(u(rng) * 3)) {
    case 0: {
        SlopeMap k = u(rng) < 0.5 ? deadband(fraction * 8 * D, 0.005 * u(rng)) : linear_map(fraction * 8 * D);
        return FirstOrder{0.2 + 1.5 * u(rng), k};
    }
    case 1: {
        const double rc = 0.5 + 1.5 * u(rng);
        return second_order(fraction * 4 * rc * D, rc);
    }
    default: {
        SlopeMap k{MapKind::Saturation, 5.0 * u(rng), 0.0, 1.0};
        return StaticMonotone{k};
    }
    }
}

Candidate random_secant_candidate(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t gens = 2 + static_cast<std::size_t>(u(rng) * 3);
    const bool with_load = u(rng) < 0.5;
    std::vector<BusParams> buses;
    for (std::size_t i = 0; i < gens; ++i) {
        const double D = 0.8 + 1.2 * u(rng);
        buses.push_back(generator(1.0 + 3.0 * u(rng), D, 0.3 * (u(rng) - 0.5), random_map_block(rng, D)));
    }
    if (with_load) buses.push_back(load(-0.2 * u(rng)));
    const auto lines = random_connected_lines(buses.size(), 1, rng, 1.0, 3.0);
    return {NetworkModel(buses, lines), with_load};
}

// Parameters are drawn around the four-area benchmark (M 4-5.5, D 1.2-1.6, tau_a 0.5, tau_b 1).
Candidate random_popov_candidate(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t gens = 3 + static_cast<std::size_t>(u(rng) * 2);
    std::vector<BusParams> buses;
    for (std::size_t i = 0; i < gens; ++i) {
        const double k = 2.0 + 14.0 * u(rng);
        GenerationDynamics dyn = u(rng) < 0.7 ? make_droop_lag2(k, 0.3 + 0.4 * u(rng), 0.7 + 0.6 * u(rng))
                                              : make_droop_lag1(k, 0.3 + 0.7 * u(rng));
        buses.push_back(generator(3.5 + 2.5 * u(rng), 1.0 + 0.8 * u(rng), 0.3 * (u(rng) - 0.5), dyn));
    }
    return {NetworkModel(buses, random_connected_lines(gens, 1, rng, 0.5, 1.5)), false};
}

Outcome certified_convergence()
{
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int certified = 0, converged = 0, contracting = 0, secant = 0, popov = 0, tries = 0;
    double worst = 0.0;
    while (certified < 20 && tries < 400) {
        ++tries;
        const bool want_popov = certified % 2 == 1;
        const auto cand = want_popov ? random_popov_candidate(rng) : random_secant_candidate(rng);
        const auto& m = cand.model;
        // Same gain margin for both tests: secant samples use at most 90% of their bound,
        // Popov samples must stay certified with every droop gain divided by 0.9.
        if (want_popov) {
            NetworkModel stressed = m;
            for (auto g : m.generators()) {
                auto bus = m.bus(g);
                bus.dynamics = with_droop_gain(*bus.dynamics, droop_gain(*bus.dynamics) / 0.9);
                stressed = stressed.with_bus(g, bus);
            }
            if (!popov_check(m, coupling_bound_sigma(m)).all_pass()) continue;
            if (!popov_check(stressed, coupling_bound_sigma(stressed)).all_pass()) continue;
        } else if (!secant_check(m).all_pass()) {
            continue;
        }
        SynchronousSolution eq;
        try {
            eq = solve_equilibrium_dae(m);
        } catch (const Error&) {
            continue;
        }
        if (!eq.security_ok) continue;

        Perturbation p;
        for (auto g : m.generators()) {
            if (g != 0) p.theta_offset[g] = 0.15 * u(rng);
            p.omega_offset[g] = 0.1 / std::sqrt(static_cast<double>(m.generators().size())) * u(rng);
        }
        const auto x0 = initial_from_equilibrium(m, eq, p);
        if (edge_angles(m, x0.theta).cwiseAbs().maxCoeff() > 0.8 * std::numbers::pi / 2) continue;

        StepPolicy policy;
        Trajectory tr;
        if (cand.dae) {
            policy.dt = 0.01;
            policy.sample_every = 1000;
            tr = simulate_dae(m, x0, 200.0, policy, eq);
            // load angles are only known once the algebraic equations are solved
            if (edge_angles(m, tr.states.front().theta).cwiseAbs().maxCoeff() > 0.8 * std::numbers::pi / 2) continue;
        } else {
            policy.dt = 10.0;
            tr = simulate_ode(m, x0, 200.0, policy, eq);
        }
        ++certified;
        (want_popov ? popov : secant)++;
        const double err = tr.status == SimStatus::Completed
                               ? (tr.states.back().omega.array() - eq.omega_star).matrix().norm()
                               : std::numeric_limits<double>::infinity();
        worst = std::max(worst, err);
        converged += err < 1e-6;
        if (err >= 1e-6 && tr.status == SimStatus::Completed) {
            // a slow but decaying run: error at T below the error at T/2
            std::size_t half = 0;
            while (half + 1 < tr.times.size() && tr.times[half] < 100.0) ++half;
            const double mid = (tr.states[half].omega.array() - eq.omega_star).matrix().norm();
            contracting += err < mid;
        }
    }
    return {certified == 20 && converged == 20,
            std::to_string(converged) + "/" + std::to_string(certified) + " converged (" + std::to_string(secant) +
                " secant, " + std::to_string(popov) + " popov), worst |w(T) - w*| " + format_double(worst) + ", " +
                std::to_string(contracting) + " of the rest still decaying at T"};
}

}  // namespace

int main()
{
    struct Criterion {
        int id;
        const char* title;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "secant constants", 1.0, secant_constants},
        {2, "certificate thresholds on worked examples", 1.0, worked_examples},
        {3, "maximum droop gain table", 60.0, table2},
        {4, "coupling matrix PSD on random graphs", 10.0, lemma3_suite},
        {5, "positive-real test versus frequency sweep", 30.0, pr_oracle},
        {6, "passivity identity", 10.0, passivity_identity},
        {7, "equilibrium consistency", 1.0, equilibrium_consistency},
        {8, "certified scenarios converge", 120.0, certified_convergence},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.budget_s;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("[%s] criterion %d: %s: %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(),
                    secs, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
