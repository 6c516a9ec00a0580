#include "gridcert/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "gridcert/error.hpp"

namespace gridcert {

namespace {

// YAML node with its dotted path, for strict reads and positioned errors.
class Field {
public:
    Field(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& message, ErrorCode code = ErrorCode::SchemaError) const
    {
        const auto mark = node_.Mark();
        const int line = mark.is_null() ? 0 : mark.line + 1;
        const int column = mark.is_null() ? 0 : mark.column + 1;
        throw ScenarioError(code, path_ + ": " + message, line, column);
    }

    const std::string& path() const { return path_; }
    bool is_map() const { return node_.IsMap(); }
    bool is_sequence() const { return node_.IsSequence(); }
    bool is_scalar() const { return node_.IsScalar(); }

    void expect_map(std::initializer_list<const char*> allowed) const
    {
        if (!node_.IsMap()) fail("expected a mapping");
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
                Field(kv.first, path_.empty() ? key : path_ + "." + key).fail("unknown key '" + key + "'");
            }
        }
    }

    std::optional<Field> get(const char* key) const
    {
        const YAML::Node child = node_[key];
        if (!child.IsDefined() || child.IsNull()) return std::nullopt;
        return Field(child, path_.empty() ? key : path_ + "." + key);
    }

    Field at(const char* key) const
    {
        auto child = get(key);
        if (!child) fail(std::string("missing required key '") + key + "'");
        return *child;
    }

    std::vector<Field> items() const
    {
        if (!node_.IsSequence()) fail("expected a list");
        std::vector<Field> out;
        for (std::size_t k = 0; k < node_.size(); ++k) {
            out.emplace_back(node_[k], path_ + "[" + std::to_string(k) + "]");
        }
        return out;
    }

    std::vector<std::pair<Field, Field>> entries() const
    {
        if (!node_.IsMap()) fail("expected a mapping");
        std::vector<std::pair<Field, Field>> out;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            out.emplace_back(Field(kv.first, path_ + "." + key), Field(kv.second, path_ + "." + key));
        }
        return out;
    }

    double number() const
    {
        if (!node_.IsScalar()) fail("expected a number");
        try {
            return node_.as<double>();
        } catch (const YAML::Exception&) {
            fail("expected a number, got '" + node_.Scalar() + "'");
        }
    }

    double positive() const
    {
        const double v = number();
        if (!(v > 0.0)) fail("must be positive");
        return v;
    }

    std::size_t index() const
    {
        const double v = number();
        if (!(v >= 0.0) || v != std::floor(v) || v > 1e9) fail("expected a nonnegative integer");
        return static_cast<std::size_t>(v);
    }

    std::string text() const
    {
        if (!node_.IsScalar()) fail("expected a string");
        return node_.Scalar();
    }

    bool flag() const
    {
        if (!node_.IsScalar()) fail("expected true or false");
        try {
            return node_.as<bool>();
        } catch (const YAML::Exception&) {
            fail("expected true or false, got '" + node_.Scalar() + "'");
        }
    }

    std::vector<double> numbers() const
    {
        std::vector<double> out;
        for (const auto& item : items()) out.push_back(item.number());
        return out;
    }

private:
    YAML::Node node_;
    std::string path_;
};

double number_or(const Field& f, const char* key, double fallback)
{
    auto child = f.get(key);
    return child ? child->number() : fallback;
}

SlopeMap parse_map(const Field& f)
{
    SlopeMap map;
    if (f.is_scalar()) {
        map.gain = f.positive();
        return map;
    }
    f.expect_map({"kind", "gain", "width", "limit"});
    const auto kind = f.get("kind") ? f.at("kind").text() : std::string("linear");
    if (kind == "linear") {
        map.kind = MapKind::Linear;
    } else if (kind == "deadband") {
        map.kind = MapKind::Deadband;
    } else if (kind == "saturation") {
        map.kind = MapKind::Saturation;
    } else if (kind == "tanh") {
        map.kind = MapKind::Tanh;
    } else {
        f.at("kind").fail("unknown map kind '" + kind + "' (linear, deadband, saturation, tanh)");
    }
    map.gain = f.at("gain").positive();
    map.width = number_or(f, "width", 0.0);
    map.limit = number_or(f, "limit", std::numeric_limits<double>::infinity());
    if (map.kind == MapKind::Saturation || map.kind == MapKind::Tanh) {
        if (!f.get("limit")) f.fail("map kind '" + kind + "' needs a limit");
    }
    return map;
}

Eigen::MatrixXd parse_matrix(const Field& f)
{
    const auto rows = f.items();
    if (rows.empty()) f.fail("matrix must not be empty");
    const auto n = rows.front().items().size();
    Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto values = rows[r].numbers();
        if (values.size() != n) rows[r].fail("ragged matrix row");
        for (std::size_t c = 0; c < n; ++c) A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[c];
    }
    return A;
}

Eigen::VectorXd parse_vector(const Field& f)
{
    const auto values = f.numbers();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

GenerationDynamics parse_dynamics(const Field& f)
{
    if (!f.is_map()) f.fail("expected a mapping with a 'type' key");
    const auto type = f.at("type").text();
    if (type == "static") {
        f.expect_map({"type", "k"});
        return StaticMonotone{parse_map(f.at("k"))};
    }
    if (type == "first_order") {
        f.expect_map({"type", "tau", "k"});
        return FirstOrder{f.at("tau").positive(), parse_map(f.at("k"))};
    }
    if (type == "second_order") {
        f.expect_map({"type", "tau_alpha", "tau_beta", "cost", "k", "output"});
        SecondOrder d;
        d.tau_alpha = f.at("tau_alpha").positive();
        d.tau_beta = f.at("tau_beta").positive();
        const auto cost = f.at("cost");
        if (cost.is_scalar()) {
            d.cost.modulus = cost.positive();
        } else {
            cost.expect_map({"modulus", "cubic"});
            d.cost.modulus = cost.at("modulus").positive();
            d.cost.cubic = number_or(cost, "cubic", 0.0);
        }
        d.k = parse_map(f.at("k"));
        if (auto out = f.get("output")) d.output = parse_map(*out);
        return d;
    }
    if (type == "linear_ss") {
        f.expect_map({"type", "A", "B", "C"});
        LinearSS d;
        d.A = parse_matrix(f.at("A"));
        d.B = parse_vector(f.at("B"));
        d.C = parse_vector(f.at("C")).transpose();
        if (d.A.rows() != d.A.cols()) f.at("A").fail("A must be square");
        if (d.B.size() != d.A.rows()) f.at("B").fail("B length must match A");
        if (d.C.size() != d.A.rows()) f.at("C").fail("C length must match A");
        return d;
    }
    if (type == "droop_lag1") {
        f.expect_map({"type", "k", "tau"});
        return make_droop_lag1(f.at("k").positive(), f.at("tau").positive());
    }
    if (type == "droop_lag2") {
        f.expect_map({"type", "k", "tau_alpha", "tau_beta"});
        return make_droop_lag2(f.at("k").positive(), f.at("tau_alpha").positive(), f.at("tau_beta").positive());
    }
    f.at("type").fail("unknown dynamics type '" + type +
                      "' (static, first_order, second_order, linear_ss, droop_lag1, droop_lag2)");
}

CertificateTest parse_certificate(const Field& f)
{
    const auto name = f.text();
    if (name == "small_gain") return CertificateTest::SmallGain;
    if (name == "secant") return CertificateTest::Secant;
    if (name == "popov") return CertificateTest::Popov;
    f.fail("unknown certificate '" + name + "' (small_gain, secant, popov)");
}

std::map<std::size_t, double> parse_bus_map(const Field& f)
{
    std::map<std::size_t, double> out;
    for (const auto& [key, value] : f.entries()) out[key.index()] = value.number();
    return out;
}

void parse_tolerances(const Field& f, Tolerances& tol)
{
    for (const auto& [key, value] : f.entries()) {
        try {
            tol.set(key.text(), value.number());
        } catch (const Error& e) {
            key.fail(e.what(), ErrorCode::SchemaError);
        }
    }
}

}  // namespace

const char* to_string(SweepParameter parameter)
{
    switch (parameter) {
    case SweepParameter::Droop: return "droop";
    case SweepParameter::Damping: return "damping";
    case SweepParameter::Slope: return "slope";
    case SweepParameter::Sigma: return "sigma";
    }
    return "unknown";
}

SweepParameter parse_sweep_parameter(const std::string& name)
{
    if (name == "droop") return SweepParameter::Droop;
    if (name == "damping") return SweepParameter::Damping;
    if (name == "slope") return SweepParameter::Slope;
    if (name == "sigma") return SweepParameter::Sigma;
    throw Error(ErrorCode::UnknownParameter,
                "unknown sweep parameter '" + name + "' (droop, damping, slope, sigma)");
}

std::vector<double> SweepSpec::values() const
{
    if (points == 0) throw Error(ErrorCode::InvalidArgument, "sweep needs at least one point");
    std::vector<double> out;
    for (std::size_t k = 0; k < points; ++k) {
        out.push_back(points == 1 ? min
                                  : min + (max - min) * static_cast<double>(k) / static_cast<double>(points - 1));
    }
    return out;
}

void Tolerances::set(const std::string& key, double value)
{
    if (!(value > 0.0) && key != "security_margin") {
        throw Error(ErrorCode::InvalidArgument, "tolerance '" + key + "' must be positive");
    }
    if (key == "power_flow") power_flow = value;
    else if (key == "security_margin") security_margin = value;
    else if (key == "newton") newton = value;
    else if (key == "singular") singular = value;
    else if (key == "rtol") rtol = value;
    else if (key == "atol") atol = value;
    else if (key == "convergence") convergence = value;
    else {
        throw Error(ErrorCode::UnknownParameter,
                    "unknown tolerance '" + key +
                        "' (power_flow, security_margin, newton, singular, rtol, atol, convergence)");
    }
}

std::string fnv1a_hex(const std::string& bytes)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << h;
    return out.str();
}

RhoGrid parse_rho_grid(const std::string& spec)
{
    std::stringstream in(spec);
    std::string part;
    std::vector<double> values;
    while (std::getline(in, part, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(part, &used));
            if (part.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "rho grid '" + spec + "' is not 'min,max,points'");
        }
    }
    if (values.size() != 3 || values[2] < 1 || values[2] != std::floor(values[2])) {
        throw Error(ErrorCode::InvalidArgument, "rho grid '" + spec + "' is not 'min,max,points'");
    }
    RhoGrid grid;
    grid.min = values[0];
    grid.max = values[1];
    grid.points = static_cast<std::size_t>(values[2]);
    grid.values();  // validates
    return grid;
}

Scenario parse_scenario(const std::string& text)
{
    YAML::Node root_node;
    try {
        root_node = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ScenarioError(ErrorCode::ParseError, e.msg, e.mark.line + 1, e.mark.column + 1);
    }
    const Field root(root_node, "");
    if (!root.is_map()) throw ScenarioError(ErrorCode::SchemaError, "scenario must be a mapping", 1, 1);
    root.expect_map({"name", "buses", "lines", "analysis", "simulation", "output", "tolerances"});

    // buses
    const auto bus_fields = root.at("buses").items();
    if (bus_fields.empty()) root.at("buses").fail("at least one bus is required");
    std::vector<std::optional<BusParams>> slots(bus_fields.size());
    for (const auto& bf : bus_fields) {
        bf.expect_map({"id", "kind", "M", "D", "p_star", "V", "dynamics"});
        const auto id = bf.at("id").index();
        if (id >= slots.size()) bf.at("id").fail("bus ids must be 0..n-1");
        if (slots[id]) bf.at("id").fail("duplicate bus id " + std::to_string(id));
        BusParams bus;
        const auto kind = bf.get("kind") ? bf.at("kind").text() : std::string("generator");
        if (kind == "generator") {
            bus.kind = BusKind::Generator;
            bus.M = bf.at("M").positive();
            bus.D = bf.at("D").positive();
        } else if (kind == "load") {
            bus.kind = BusKind::Load;
            if (bf.get("M") || bf.get("D")) bf.fail("load buses carry only p_star and V");
            if (bf.get("dynamics")) bf.at("dynamics").fail("load buses carry no generation dynamics");
        } else {
            bf.at("kind").fail("kind must be 'generator' or 'load'");
        }
        bus.p_star = number_or(bf, "p_star", 0.0);
        bus.V = bf.get("V") ? bf.at("V").positive() : 1.0;
        if (auto dyn = bf.get("dynamics")) bus.dynamics = parse_dynamics(*dyn);
        slots[id] = bus;
    }
    std::vector<BusParams> buses;
    for (auto& s : slots) buses.push_back(*s);

    std::vector<Line> lines;
    if (auto lf = root.get("lines")) {
        for (const auto& item : lf->items()) {
            item.expect_map({"i", "j", "b_abs"});
            lines.push_back({item.at("i").index(), item.at("j").index(), item.at("b_abs").positive()});
        }
    }

    Scenario sc(NetworkModel(std::move(buses), std::move(lines)));
    sc.source_hash = fnv1a_hex(text);
    sc.name = root.get("name") ? root.at("name").text() : std::string("scenario");

    if (auto tf = root.get("tolerances")) parse_tolerances(*tf, sc.tolerances);

    if (auto af = root.get("analysis")) {
        af->expect_map({"certificates", "sigma", "rho_grid", "secant_refinement", "table2", "sweep"});
        if (auto cf = af->get("certificates")) {
            for (const auto& item : cf->items()) sc.certificates.push_back(parse_certificate(item));
        }
        if (auto sf = af->get("sigma")) {
            for (const auto& [bus, value] : parse_bus_map(*sf)) {
                if (bus >= sc.model.bus_count()) sf->fail("sigma override for unknown bus " + std::to_string(bus));
                sc.sigma_overrides.emplace_back(bus, value);
            }
        }
        if (auto rf = af->get("rho_grid")) {
            rf->expect_map({"min", "max", "points", "passive_limit"});
            sc.rho_grid.min = number_or(*rf, "min", sc.rho_grid.min);
            sc.rho_grid.max = number_or(*rf, "max", sc.rho_grid.max);
            if (auto p = rf->get("points")) sc.rho_grid.points = p->index();
            if (auto p = rf->get("passive_limit")) sc.rho_grid.include_infinity = p->flag();
            try {
                sc.rho_grid.values();
            } catch (const Error& e) {
                rf->fail(e.what());
            }
        }
        if (auto rf = af->get("secant_refinement")) {
            const auto v = rf->text();
            if (v == "bregman") sc.refinement = OutputRefinement::Bregman;
            else if (v == "four_block") sc.refinement = OutputRefinement::FourBlock;
            else rf->fail("secant_refinement must be 'bregman' or 'four_block'");
        }
        if (auto tf = af->get("table2")) {
            tf->expect_map({"bus", "sigma_values", "bracket", "tol"});
            Table2Spec t;
            if (auto b = tf->get("bus")) t.bus = b->index();
            if (auto s = tf->get("sigma_values")) t.sigma_values = s->numbers();
            if (auto b = tf->get("bracket")) {
                const auto v = b->numbers();
                if (v.size() != 2 || !(v[0] < v[1])) b->fail("bracket must be [lo, hi] with lo < hi");
                t.lo = v[0];
                t.hi = v[1];
            }
            if (auto s = tf->get("tol")) t.tol = s->positive();
            if (t.bus >= sc.model.bus_count()) tf->fail("table2 bus out of range");
            sc.table2 = t;
        }
        if (auto wf = af->get("sweep")) {
            wf->expect_map({"parameter", "bus", "min", "max", "points", "certificate"});
            SweepSpec s;
            try {
                s.parameter = parse_sweep_parameter(wf->at("parameter").text());
            } catch (const Error& e) {
                wf->at("parameter").fail(e.what(), ErrorCode::UnknownParameter);
            }
            if (auto b = wf->get("bus")) s.bus = b->index();
            s.min = wf->at("min").number();
            s.max = wf->at("max").number();
            if (auto p = wf->get("points")) s.points = p->index();
            if (auto c = wf->get("certificate")) s.certificate = parse_certificate(*c);
            if (s.bus >= sc.model.bus_count()) wf->fail("sweep bus out of range");
            sc.sweep = s;
        }
    }

    if (auto sf = root.get("simulation")) {
        sf->expect_map({"model", "horizon", "dt", "sample_every", "input", "perturbation"});
        auto& sim = sc.simulation;
        if (auto m = sf->get("model")) {
            const auto v = m->text();
            if (v == "auto") sim.model = SimulationModel::Auto;
            else if (v == "dae") sim.model = SimulationModel::Dae;
            else if (v == "ode") sim.model = SimulationModel::Ode;
            else m->fail("model must be 'auto', 'dae' or 'ode'");
        }
        if (auto h = sf->get("horizon")) sim.horizon = h->positive();
        if (auto d = sf->get("dt")) sim.policy.dt = d->positive();
        if (auto s = sf->get("sample_every")) {
            sim.policy.sample_every = s->index();
            if (sim.policy.sample_every == 0) s->fail("sample_every must be >= 1");
        }
        if (auto i = sf->get("input")) {
            const auto v = i->text();
            if (v == "closed") sim.input = InputMode::Closed;
            else if (v == "hold") sim.input = InputMode::HoldEquilibrium;
            else i->fail("input must be 'closed' or 'hold'");
        }
        if (auto pf = sf->get("perturbation")) {
            pf->expect_map({"angle_scale", "theta", "omega"});
            sim.perturbation.angle_scale = number_or(*pf, "angle_scale", 1.0);
            if (auto t = pf->get("theta")) {
                sim.perturbation.theta_offset = parse_bus_map(*t);
                for (const auto& [bus, v] : sim.perturbation.theta_offset) {
                    if (bus >= sc.model.bus_count()) t->fail("angle offset for unknown bus " + std::to_string(bus));
                }
            }
            if (auto w = pf->get("omega")) {
                sim.perturbation.omega_offset = parse_bus_map(*w);
                for (const auto& [bus, v] : sim.perturbation.omega_offset) {
                    if (bus >= sc.model.bus_count() || !sc.model.is_generator(bus)) {
                        w->fail("frequency offset needs a generator bus, got " + std::to_string(bus));
                    }
                }
            }
        }
    }

    if (auto of = root.get("output")) {
        of->expect_map({"dir", "format"});
        if (auto d = of->get("dir")) sc.output.dir = d->text();
        if (auto f = of->get("format")) {
            sc.output.format = f->text();
            if (sc.output.format != "csv" && sc.output.format != "json-tree") f->fail("format must be 'csv' or 'json-tree'");
        }
    }
    return sc;
}

Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open scenario file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

}  // namespace gridcert
