#include "pmussl/config.hpp"
#include "pmussl/experiment.hpp"
#include "pmussl/metrics.hpp"
#include "pmussl/modal_features.hpp"
#include "pmussl/ssl_engines.hpp"
#include "pmussl/synth_events.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace pmussl;

namespace {

py::dict protocol_dict(Index n_D, int n_K, int n_L, int delta_U) {
    const auto p = protocol_sizes(n_D, n_K, n_L, delta_U);
    py::dict d;
    d["n_D"] = p.n_D;
    d["n_T"] = p.n_T;
    d["n_V"] = p.n_V;
    d["n_L"] = p.n_L;
    d["n_U"] = p.n_U;
    d["n_S"] = p.n_S;
    return d;
}

py::dict modes_dict(const Matrix& Y, double Ts, int p, bool detrend) {
    ExtractionConfig cfg;
    cfg.modes = p;
    cfg.retained_pmus = 1;
    cfg.detrend = detrend;
    const auto ms = estimate_modes(Y, cfg, Ts);
    py::dict d;
    d["sigma"] = ms.sigma;
    d["omega"] = ms.omega;
    d["magnitude"] = ms.magnitude;
    d["angle"] = ms.angle;
    d["pencil_rank"] = ms.pencil_rank;
    return d;
}

std::filesystem::path generate(const std::filesystem::path& config, const std::filesystem::path& out,
                               std::optional<std::uint64_t> seed) {
    auto cfg = load_config(config);
    cfg.require("generator");
    cfg.require("counts");
    if (seed) cfg.generator.seed = *seed;
    const auto events = generate_dataset(cfg.counts, cfg.generator, cfg.signatures, cfg.generator.seed);
    return write_events(events, out);
}

py::tuple extract(const std::filesystem::path& manifest, const std::filesystem::path& config, int jobs,
                  std::optional<std::filesystem::path> out) {
    const auto cfg = load_config(config);
    const auto events = read_events(manifest);
    const auto ds = extract_dataset(events, cfg.extraction, nullptr, jobs);
    if (out) write_features(ds, *out);
    return py::make_tuple(ds.X, ds.Y, ds.feature_names, ds.event_ids);
}

py::list run(const std::filesystem::path& features, const std::filesystem::path& config,
             std::optional<std::uint64_t> seed, int jobs) {
    auto cfg = load_config(config);
    cfg.require("plan");
    if (seed) cfg.plan.master_seed = *seed;
    const auto data = read_features(features);
    RunOptions opt;
    opt.jobs = jobs;
    py::list out;
    for (const auto& r : run_plan(data, cfg.plan, opt)) {
        py::dict d;
        d["engine"] = r.key.engine;
        d["classifier"] = r.key.classifier;
        d["k"] = r.key.k;
        d["q"] = r.key.q;
        d["s"] = r.key.s;
        d["r"] = r.key.r;
        d["n_U_s"] = r.n_U_s;
        d["auc"] = r.auc;
        d["converged"] = r.converged;
        out.append(d);
    }
    return out;
}

Matrix fit_score(const std::string& kind, const HyperParams& params, const Matrix& X, const Labels& Y,
                 const Matrix& X_test) {
    return fit({kind_from_name(kind), params}, X, Y).score(X_test);
}

Labels self_training(const std::string& kind, const HyperParams& params, const Matrix& X_L, const Labels& Y_L,
                     const Matrix& X_U, Index batch) {
    return self_train({kind_from_name(kind), params}, make_mixed_set(X_L, Y_L, X_U), batch);
}

py::tuple spread(const Matrix& X, const Labels& Y, double alpha, std::optional<double> sigma, double tol,
                 int max_iter) {
    const auto G = build_affinity(X, sigma ? *sigma : default_sigma(X));
    LabelSpreadOptions opt;
    opt.alpha = alpha;
    opt.tol = tol;
    opt.max_iter = max_iter;
    const auto r = label_spread(G, Y, opt);
    return py::make_tuple(r.labels, r.F, r.converged);
}

Labels tsvm(const Matrix& X_L, const Labels& Y_L, const Matrix& X_U, double C, double C_u,
            const std::string& kernel, double gamma) {
    Kernel k;
    if (kernel == "linear")
        k.type = KernelType::Linear;
    else if (kernel == "rbf")
        k.type = KernelType::Rbf;
    else
        throw ConfigError("unknown kernel '" + kernel + "' (linear, rbf)");
    k.gamma = gamma > 0.0 ? gamma : 1.0 / static_cast<double>(X_L.cols());
    return tsvm_multiclass(make_mixed_set(X_L, Y_L, X_U), C, C_u, k).labels;
}

}  // namespace

PYBIND11_MODULE(_pmussl, m) {
    m.doc() = "Semi-supervised PMU event classification";

    // later registrations are tried first, so the subclass goes last
    const auto& error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", error.ptr());

    m.def("protocol_sizes", &protocol_dict, py::arg("n_D"), py::arg("n_K"), py::arg("n_L"), py::arg("delta_U"));
    m.def("estimate_modes", &modes_dict, py::arg("Y"), py::arg("Ts"), py::arg("p"), py::arg("detrend") = true,
          "Matrix-pencil modes of an m x N block of streams.");
    m.def("generate", &generate, py::arg("config"), py::arg("out"), py::arg("seed") = py::none(),
          "Writes synthetic events to `out`; returns the manifest path.");
    m.def("extract", &extract, py::arg("manifest"), py::arg("config"), py::arg("jobs") = 1,
          py::arg("out") = py::none(), "Returns (X, y, feature_names, event_ids); writes a features CSV to `out`.");
    m.def("run", &run, py::arg("features"), py::arg("config"), py::arg("seed") = py::none(), py::arg("jobs") = 1,
          "Runs the configured plan; returns one dict per cell.");
    m.def("fit_score", &fit_score, py::arg("kind"), py::arg("params"), py::arg("X"), py::arg("y"),
          py::arg("X_test"));
    m.def("self_train", &self_training, py::arg("kind"), py::arg("params"), py::arg("X_L"), py::arg("y_L"),
          py::arg("X_U"), py::arg("batch"));
    m.def("label_spread", &spread, py::arg("X"), py::arg("y"), py::arg("alpha") = 0.2,
          py::arg("sigma") = py::none(), py::arg("tol") = 1e-6, py::arg("max_iter") = 1000,
          "y holds -1 for unlabeled rows. Returns (labels, F, converged).");
    m.def("tsvm", &tsvm, py::arg("X_L"), py::arg("y_L"), py::arg("X_U"), py::arg("C") = 1.0,
          py::arg("C_u") = 1.0, py::arg("kernel") = "linear", py::arg("gamma") = 0.0);
    m.def("roc_auc_ovr",
          [](const Matrix& S, const Labels& y, const std::vector<int>& classes) { return roc_auc_ovr(S, y, classes); },
          py::arg("scores"), py::arg("y"), py::arg("classes"));
}
