#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "erkf/io.hpp"
#include "erkf/pipeline.hpp"

namespace py = pybind11;
using namespace erkf;

namespace {

// Dense row-major matrices cross the boundary as NumPy arrays; the column
// vectors as 1-D arrays.
using PyMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

py::dict step_to_dict(const StepOutput& out) {
  py::dict d;
  d["x_filtered"] = out.x_filtered;
  d["x_pred_next"] = out.x_pred_next;
  d["P_pred_next"] = PyMat(out.P_pred_next);
  return d;
}

Backend parse_backend(const std::string& name) {
  if (name == "givens") return Backend::kGivens;
  if (name == "inverse") return Backend::kInverse;
  throw py::value_error("backend must be 'givens' or 'inverse'");
}

linalg::Schedule parse_schedule(const std::string& name) {
  if (name == "shared") return linalg::Schedule::kShared;
  if (name == "per-column") return linalg::Schedule::kPerColumn;
  throw py::value_error("schedule must be 'shared' or 'per-column'");
}

models::ModelConfig config_from(const std::string& text) { return io::parse_config(text); }

}  // namespace

PYBIND11_MODULE(_erkf, m) {
  m.doc() = "Extended robust Kalman filter with a Givens-QR solver";

  // Library errors surface as their Python counterparts. Translators run in
  // reverse registration order, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
  py::register_exception<StructuralError>(m, "StructuralError", PyExc_ValueError);
  py::register_exception<SchedulerError>(m, "SchedulerError", PyExc_ValueError);

  // --- linear algebra -----------------------------------------------------
  m.def(
      "givens_coeffs",
      [](double a, double b) {
        const auto g = linalg::givens_coeffs(a, b);
        return py::make_tuple(g.c, g.s, g.r);
      },
      py::arg("a"), py::arg("b"), "Rotation (c, s, r) with c*a + s*b = r >= 0.");
  m.def(
      "qr_triangularize",
      [](const PyMat& augmented) {
        const auto res = linalg::qr_triangularize(augmented);
        return py::make_tuple(PyMat(res.r), Eigen::VectorXd(res.z));
      },
      py::arg("augmented"), "Triangularize [A | b] by Givens rotations; returns (R, z).");
  m.def(
      "back_substitute_tail",
      [](const PyMat& r, const Eigen::VectorXd& z, Index tail) {
        return Eigen::VectorXd(linalg::back_substitute_tail(r, z, tail));
      },
      py::arg("r"), py::arg("z"), py::arg("tail"),
      "Last `tail` components of the solution of R y = z.");
  m.def(
      "gaussian_inverse", [](const PyMat& a) { return PyMat(linalg::gaussian_inverse(a)); },
      py::arg("a"));
  m.def(
      "singular_value_extrema",
      [](const PyMat& p) {
        const auto ex = linalg::singular_value_extrema(p);
        return py::make_tuple(ex.sigma_max, ex.sigma_min);
      },
      py::arg("p"));

  // --- filter -------------------------------------------------------------
  m.def(
      "erkf_step",
      [](const PyMat& F, const PyMat& G, const PyMat& H, const PyMat& K, const PyMat& Q,
         const PyMat& R, const PyMat& NF, const PyMat& NG, const PyMat& NH, const PyMat& NK,
         const Eigen::VectorXd& x_pred, const PyMat& P_pred, const Eigen::VectorXd& z,
         const std::string& backend, const std::string& schedule) {
        UncertainModel model{F, G, H, K, Q, R, NF, NG, NH, NK, {}, {}};
        const FilterState state{x_pred, P_pred};
        StepOptions opts;
        opts.schedule = parse_schedule(schedule);
        return step_to_dict(erkf_step(parse_backend(backend), model, state, z, opts));
      },
      py::arg("F"), py::arg("G"), py::arg("H"), py::arg("K"), py::arg("Q"), py::arg("R"),
      py::arg("NF"), py::arg("NG"), py::arg("NH"), py::arg("NK"), py::arg("x_pred"),
      py::arg("P_pred"), py::arg("z"), py::arg("backend") = "givens",
      py::arg("schedule") = "shared",
      "One recursion step. Returns a dict with x_filtered, x_pred_next, P_pred_next.");
  m.def("predicted_givens_flops", &predicted_givens_flops, py::arg("n"), py::arg("M"));
  m.def("predicted_inverse_flops", &predicted_inverse_flops, py::arg("M"));
  m.def(
      "flop_report",
      [](Index M) {
        const auto rep = flop_report(dims_for_size(M));
        py::dict d;
        d["n"] = rep.dims.n;
        d["M"] = rep.dims.M();
        d["givens_flops"] = rep.givens_flops;
        d["inverse_flops"] = rep.inverse_flops;
        d["givens_shared_flops"] = rep.givens_shared_flops;
        d["inverse_shared_flops"] = rep.inverse_shared_flops;
        d["predicted_givens"] = rep.predicted_givens;
        d["predicted_inverse"] = rep.predicted_inverse;
        return d;
      },
      py::arg("M"), "Measured and predicted FLOPs of one step at augmented size M.");

  // --- models -------------------------------------------------------------
  m.def(
      "omega_matrix", [](double phi, double theta) { return PyMat(models::omega_matrix(phi, theta)); },
      py::arg("phi"), py::arg("theta"));
  m.def(
      "psi_matrix", [](double lat, double alt) { return PyMat(models::psi_matrix(lat, alt)); },
      py::arg("lat"), py::arg("alt"));
  m.def(
      "dcm_ned_to_body",
      [](double phi, double theta, double psi) {
        return PyMat(models::dcm_ned_to_body(phi, theta, psi));
      },
      py::arg("phi"), py::arg("theta"), py::arg("psi"));
  m.def("wrap_angle", &models::wrap_angle, py::arg("a"));

  // --- end-to-end on CSV text ---------------------------------------------
  m.def(
      "synth",
      [](const std::string& scenario, double duration, std::uint64_t seed) {
        auto scn = sim::SyntheticScenario::named(scenario);
        scn.duration = duration;
        const auto d = sim::generate_synthetic(scn, seed);
        py::dict out;
        out["imu"] = io::imu_csv(d.imu);
        out["gps"] = io::gps_csv(d.gps);
        out["truth"] = io::truth_csv(d.truth);
        return out;
      },
      py::arg("scenario"), py::arg("duration"), py::arg("seed"),
      "Synthetic sensor data as CSV text: dict with imu, gps, truth.");
  m.def(
      "run",
      [](const std::string& imu, const std::string& gps, const std::string& backend,
         const std::string& config) {
        app::RunOptions opts;
        opts.nav.backend = parse_backend(backend);
        const auto summary =
            app::run_pipeline(io::parse_imu_csv(imu), io::parse_gps_csv(gps), config_from(config), opts);
        return io::estimates_csv(summary.records);
      },
      py::arg("imu"), py::arg("gps"), py::arg("backend") = "givens", py::arg("config") = "",
      "Fuse IMU and GPS CSV text; returns the estimates CSV.");
  m.def(
      "compare",
      [](const std::string& imu, const std::string& gps, double threshold,
         const std::string& config) {
        const auto res = app::compare_backends(io::parse_imu_csv(imu), io::parse_gps_csv(gps),
                                               config_from(config), threshold);
        py::dict d;
        d["pass"] = res.pass;
        d["max_delta"] = res.max_delta;
        d["max_state_rel_diff"] = res.max_state_rel_diff;
        d["csv"] = app::comparison_csv(res.rows);
        return d;
      },
      py::arg("imu"), py::arg("gps"), py::arg("threshold") = 1e-12, py::arg("config") = "");
}
