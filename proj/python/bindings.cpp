#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gridcert/certificates.hpp"
#include "gridcert/commands.hpp"
#include "gridcert/error.hpp"
#include "gridcert/lti.hpp"
#include "gridcert/scenario.hpp"

namespace py = pybind11;
using namespace gridcert;

namespace {

py::dict command_result(const CommandResult& r)
{
    py::dict out;
    out["exit_code"] = r.exit_code;
    out["report"] = r.report ? py::object(py::str(r.report->serialize())) : py::object(py::none());
    out["output"] = r.output;
    out["error"] = r.error;
    out["files"] = r.files;
    return out;
}

CommandOptions make_options(const std::string& scenario, std::optional<std::string> out_dir,
                            std::optional<std::string> rho_grid)
{
    CommandOptions options;
    options.scenario = scenario;
    options.out_dir = std::move(out_dir);
    if (rho_grid) options.rho_grid = parse_rho_grid(*rho_grid);
    return options;
}

RationalTransfer make_tf(const std::vector<double>& num, const std::vector<double>& den)
{
    return {Polynomial(num), Polynomial(den)};
}

py::dict verdict_dict(const PositiveRealVerdict& v)
{
    py::dict out;
    out["is_pr"] = v.is_pr;
    out["failure"] = v.failure_reason ? py::object(py::str(to_string(*v.failure_reason))) : py::object(py::none());
    out["margin"] = v.margin;
    out["witness"] = v.witness ? py::cast(*v.witness) : py::object(py::none());
    out["detail"] = v.detail;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    m.attr("__version__") = version();

    m.def(
        "analyze",
        [](const std::string& scenario, std::optional<std::string> out_dir, std::optional<std::string> rho_grid) {
            return command_result(cmd_analyze(make_options(scenario, std::move(out_dir), std::move(rho_grid))));
        },
        py::arg("scenario"), py::arg("out_dir") = py::none(), py::arg("rho_grid") = py::none());
    m.def(
        "simulate",
        [](const std::string& scenario, std::optional<std::string> out_dir) {
            return command_result(cmd_simulate(make_options(scenario, std::move(out_dir), std::nullopt)));
        },
        py::arg("scenario"), py::arg("out_dir") = py::none());
    m.def(
        "table2",
        [](const std::string& scenario, std::optional<std::string> out_dir, std::optional<std::string> rho_grid) {
            return command_result(cmd_table2(make_options(scenario, std::move(out_dir), std::move(rho_grid))));
        },
        py::arg("scenario"), py::arg("out_dir") = py::none(), py::arg("rho_grid") = py::none());
    m.def(
        "sweep",
        [](const std::string& scenario, const std::string& parameter, std::size_t bus, std::array<double, 3> range,
           std::optional<std::string> certificate, std::optional<std::string> out_dir) {
            auto options = make_options(scenario, std::move(out_dir), std::nullopt);
            options.parameter = parameter;
            options.bus = bus;
            options.range = range;
            options.certificate = std::move(certificate);
            return command_result(cmd_sweep(options));
        },
        py::arg("scenario"), py::arg("parameter"), py::arg("bus"), py::arg("range"),
        py::arg("certificate") = py::none(), py::arg("out_dir") = py::none());

    m.def("secant_factor", &secant_factor, py::arg("n_p"));
    m.def(
        "polynomial_roots", [](const std::vector<double>& ascending) { return Polynomial(ascending).roots(); },
        py::arg("coefficients"));
    m.def(
        "bus_transfer",
        [](double M, double D, const Eigen::MatrixXd& A, const Eigen::VectorXd& B, const Eigen::RowVectorXd& C) {
            const auto tf = bus_transfer_G(M, D, StateSpace{A, B, C, 0.0});
            return py::make_tuple(tf.num.coeffs(), tf.den.coeffs());
        },
        py::arg("M"), py::arg("D"), py::arg("A"), py::arg("B"), py::arg("C"));
    m.def(
        "popov_transform",
        [](const std::vector<double>& num, const std::vector<double>& den, double sigma, double rho,
           bool check_pole) {
            const auto h = popov_transform(make_tf(num, den), PopovSigma{sigma}, rho,
                                           check_pole ? PoleCheck::Enforce : PoleCheck::Skip);
            return py::make_tuple(h.num.coeffs(), h.den.coeffs());
        },
        py::arg("num"), py::arg("den"), py::arg("sigma"), py::arg("rho"), py::arg("check_pole") = true);
    m.def(
        "is_positive_real",
        [](const std::vector<double>& num, const std::vector<double>& den, bool infinite_feedthrough) {
            PrOptions options;
            options.infinite_feedthrough = infinite_feedthrough;
            return verdict_dict(is_positive_real(make_tf(num, den), options));
        },
        py::arg("num"), py::arg("den"), py::arg("infinite_feedthrough") = false);
}
