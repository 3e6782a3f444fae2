#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "rgmv/backtest.hpp"
#include "rgmv/benchmarks.hpp"
#include "rgmv/cli.hpp"
#include "rgmv/errors.hpp"
#include "rgmv/gmv_pgd.hpp"
#include "rgmv/market_data.hpp"
#include "rgmv/robust_core.hpp"
#include "rgmv/simulation.hpp"

namespace py = pybind11;
using namespace rgmv;

namespace {

CovEstimate as_cov(const MatrixXd& m) { return CovEstimate(m, CovKind::sample); }

py::dict trace_dict(const PgdTrace& trace) {
    py::dict out;
    out["weights"] = trace.final_weights().values();
    out["eta"] = trace.eta;
    out["steps"] = trace.steps;
    out["in_sample_risk"] = trace.in_sample_risk;
    out["path"] = trace.path;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Robust GMV portfolio construction";

    py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const NotImplementedError& e) {
            PyErr_SetString(PyExc_NotImplementedError, e.what());
        }
    });

    py::class_<RobustConfig>(m, "RobustConfig")
        .def(py::init<>())
        .def_readwrite("epsilon", &RobustConfig::epsilon)
        .def_readwrite("delta", &RobustConfig::delta)
        .def_readwrite("buckets", &RobustConfig::buckets)
        .def_readwrite("truncation_scale", &RobustConfig::truncation_scale)
        .def_readwrite("center_iterations", &RobustConfig::center_iterations)
        .def_readwrite("seed", &RobustConfig::seed)
        .def("validate", &RobustConfig::validate);

    py::class_<PgdConfig>(m, "PgdConfig")
        .def(py::init<>())
        .def_property(
            "mode", [](const PgdConfig& c) { return std::string(to_string(c.mode)); },
            [](PgdConfig& c, const std::string& v) {
                if (v != "gmv" && v != "mv") throw std::invalid_argument("mode must be 'gmv' or 'mv'");
                c.mode = v == "gmv" ? PgdMode::gmv : PgdMode::mv;
            })
        .def_readwrite("eta", &PgdConfig::eta)
        .def_readwrite("steps", &PgdConfig::steps)
        .def_readwrite("gamma", &PgdConfig::gamma)
        .def_readwrite("delta", &PgdConfig::delta)
        .def_readwrite("record_path", &PgdConfig::record_path)
        .def_readwrite("seed", &PgdConfig::seed);

    py::class_<ActionEstimator>(m, "ActionEstimator")
        .def_static("robust", &ActionEstimator::robust, py::arg("sample"), py::arg("config") = RobustConfig{})
        .def_static("plugin", [](const MatrixXd& cov) { return ActionEstimator::plugin(as_cov(cov)); },
                    py::arg("cov"))
        .def_static("plugin_from_sample", &ActionEstimator::plugin_from_sample, py::arg("sample"))
        .def("__call__", [](const ActionEstimator& a, const VectorXd& w) { return a(w); })
        .def_property_readonly("dimension", &ActionEstimator::dimension)
        .def_property_readonly("mode", [](const ActionEstimator& a) {
            return a.mode() == EstimatorMode::robust ? "robust" : "plugin";
        });

    m.def("load_price_csv", [](const std::filesystem::path& path) {
        const PricePanel p = load_price_csv(path);
        std::vector<std::string> dates;
        for (const auto& d : p.dates) dates.push_back(format_iso_date(d));
        py::dict out;
        out["dates"] = dates;
        out["tickers"] = p.tickers;
        out["prices"] = p.prices;
        return out;
    });
    m.def("log_returns", [](const MatrixXd& prices) {
        if (prices.rows() < 2) throw DataError("need at least two price rows to form returns");
        if ((prices.array() <= 0.0).any()) throw DataError("prices must be positive");
        const Index t = prices.rows() - 1;
        return MatrixXd((prices.bottomRows(t).array() / prices.topRows(t).array()).log());
    });
    m.def("sample_covariance", [](const MatrixXd& window) { return sample_covariance(window).matrix; });
    m.def("effective_rank", [](const MatrixXd& cov) { return effective_rank(as_cov(cov)); });

    m.def("robust_action",
          [](const MatrixXd& sample, const VectorXd& w, const RobustConfig& config) {
              return robust_action(ActionEstimator::robust(sample, config), w);
          },
          py::arg("sample"), py::arg("w"), py::arg("config") = RobustConfig{});
    m.def("robust_mean", &robust_mean, py::arg("sample"), py::arg("config") = RobustConfig{});

    m.def("project_sum_one", [](const VectorXd& x) { return project_sum_one(x).values(); });
    m.def("gmv_pgd",
          [](const ActionEstimator& action, const PgdConfig& config) { return trace_dict(gmv_pgd(action, config)); },
          py::arg("action"), py::arg("config") = PgdConfig{});
    m.def("mv_pgd",
          [](const VectorXd& mean, const ActionEstimator& action, PgdConfig config) {
              config.mode = PgdMode::mv;
              return trace_dict(mv_pgd(mean, action, config));
          },
          py::arg("mean"), py::arg("action"), py::arg("config") = PgdConfig{});

    m.def("ew_weights", [](Index n) { return ew_weights(n).values(); });
    m.def("sample_gmv", [](const MatrixXd& cov) { return sample_gmv(as_cov(cov)).values(); });
    m.def("gmv_long", [](const MatrixXd& cov, int steps) { return gmv_long(as_cov(cov), steps).values(); },
          py::arg("cov"), py::arg("steps") = 10'000);
    m.def("project_simplex", [](const VectorXd& x) { return project_simplex(x).values(); });
    m.def("linear_shrinkage", [](const MatrixXd& sample) {
        const ShrinkageResult r = linear_shrinkage(sample_covariance(sample), sample);
        return py::make_tuple(r.cov.matrix, r.intensity);
    });

    m.def("turnover", &turnover, py::arg("targets"), py::arg("drifted"));
    m.def("target_turnover", &target_turnover, py::arg("targets"));
    m.def("sd_sr", [](const VectorXd& r) {
        const SdSr s = sd_sr(r);
        return py::make_tuple(s.average, s.sd, s.sr);
    });
    m.def("max_drawdown", &max_drawdown, py::arg("wealth"));
    m.def("calmar", &calmar, py::arg("returns"), py::arg("wealth"));

    m.def("sample_gaussian", [](const MatrixXd& cov, Index rows, std::uint64_t seed) {
        return sample_gaussian(CovEstimate(cov, CovKind::exact_synthetic), rows, seed);
    }, py::arg("cov"), py::arg("rows"), py::arg("seed") = 0);
    m.def("sample_rademacher_subset",
          [](Index n, std::uint64_t seed) { return sample_rademacher_subset(n, seed); }, py::arg("n"),
          py::arg("seed") = 0);
    m.def("sample_heavy_mixture",
          [](const MatrixXd& cov, Index rows, double p_heavy, std::uint64_t seed) {
              const auto spec = HeavyMixtureSpec::from_covariance(CovEstimate(cov, CovKind::exact_synthetic), p_heavy);
              return sample_heavy_mixture(spec, rows, seed);
          },
          py::arg("cov"), py::arg("rows"), py::arg("p_heavy") = 0.001, py::arg("seed") = 0);
    m.def("rotate_for_benign_optimum",
          [](const MatrixXd& cov, Index top_count) {
              const auto r = rotate_for_benign_optimum(CovEstimate(cov, CovKind::exact_synthetic), top_count);
              return py::make_tuple(r.rotated.matrix, r.rotation);
          },
          py::arg("cov"), py::arg("top_count") = 15);
    m.def("synthetic_market_covariance",
          [](Index n, double rank, std::uint64_t seed) { return synthetic_market_covariance(n, rank, seed).matrix; },
          py::arg("n"), py::arg("effective_rank"), py::arg("seed") = 0);

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    });
}
