#include "pmussl/classifiers.hpp"

#include "models.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace pmussl {

std::string_view kind_name(ClassifierKind k) noexcept {
    switch (k) {
        case ClassifierKind::kNN: return "kNN";
        case ClassifierKind::DT: return "DT";
        case ClassifierKind::GB: return "GB";
        case ClassifierKind::SVML: return "SVML";
        case ClassifierKind::SVMR: return "SVMR";
    }
    return "?";
}

ClassifierKind kind_from_name(std::string_view name) {
    for (auto k : kAllClassifierKinds)
        if (kind_name(k) == name) return k;
    throw ConfigError("unknown classifier '" + std::string(name) + "'");
}

namespace {

const HyperParams& defaults_for(ClassifierKind k) {
    static const HyperParams knn{{"k", 5}};
    static const HyperParams dt{{"max_depth", 5}, {"min_leaf", 1}};
    static const HyperParams gb{{"n_trees", 100}, {"depth", 3}, {"learning_rate", 0.1}, {"min_leaf", 1}};
    static const HyperParams svml{{"C", 1.0}};
    // gamma 0 stands for 1/d
    static const HyperParams svmr{{"C", 1.0}, {"gamma", 0.0}};
    switch (k) {
        case ClassifierKind::kNN: return knn;
        case ClassifierKind::DT: return dt;
        case ClassifierKind::GB: return gb;
        case ClassifierKind::SVML: return svml;
        case ClassifierKind::SVMR: return svmr;
    }
    return knn;
}

}  // namespace

double ClassifierSpec::get(const std::string& key) const {
    if (auto it = params.find(key); it != params.end()) return it->second;
    const auto& def = defaults_for(kind);
    if (auto it = def.find(key); it != def.end()) return it->second;
    throw ConfigError(std::string(kind_name(kind)) + ": unknown hyperparameter '" + key + "'");
}

void ClassifierSpec::validate() const {
    const auto& def = defaults_for(kind);
    for (const auto& [key, value] : params) {
        if (!def.contains(key))
            throw ConfigError(std::string(kind_name(kind)) + ": unknown hyperparameter '" + key + "'");
        if (!std::isfinite(value)) throw ConfigError(describe() + ": non-finite hyperparameter");
    }
    auto positive = [&](const char* key) {
        if (!(get(key) > 0.0))
            throw ConfigError(std::string(kind_name(kind)) + ": " + key + " must be > 0");
    };
    switch (kind) {
        case ClassifierKind::kNN: positive("k"); break;
        case ClassifierKind::DT: positive("max_depth"); positive("min_leaf"); break;
        case ClassifierKind::GB:
            if (get("n_trees") < 0.0) throw ConfigError("GB: n_trees must be >= 0");
            positive("depth");
            positive("learning_rate");
            positive("min_leaf");
            break;
        case ClassifierKind::SVML: positive("C"); break;
        case ClassifierKind::SVMR:
            positive("C");
            if (get("gamma") < 0.0) throw ConfigError("SVMR: gamma must be > 0");
            break;
    }
}

std::string ClassifierSpec::describe() const {
    std::ostringstream os;
    os << kind_name(kind) << '{';
    bool first = true;
    for (const auto& [k, v] : params) {
        os << (first ? "" : ",") << k << '=' << v;
        first = false;
    }
    os << '}';
    return os.str();
}

TrainedModel::TrainedModel(ClassifierSpec spec, Standardizer std, std::vector<int> classes,
                           std::shared_ptr<const detail::ModelCore> core)
    : spec_(std::move(spec)),
      standardizer_(std::move(std)),
      classes_(std::move(classes)),
      core_(std::move(core)) {}

void TrainedModel::check_dim(const Matrix& X) const {
    if (X.cols() != dim())
        throw ShapeError("model expects " + std::to_string(dim()) + " features, got " +
                         std::to_string(X.cols()));
}

Matrix TrainedModel::score(const Matrix& X) const {
    if (X.rows() == 0) return Matrix(0, static_cast<Index>(classes_.size()));
    check_dim(X);
    return core_->score(standardizer_.transform(X));
}

Labels TrainedModel::predict(const Matrix& X) const {
    if (X.rows() == 0) return {};
    return argmax_labels(score(X), classes_);
}

Labels argmax_labels(const Matrix& scores, const std::vector<int>& classes) {
    if (scores.cols() != static_cast<Index>(classes.size()))
        throw ShapeError("argmax_labels: score width differs from class count");
    Labels out(static_cast<std::size_t>(scores.rows()));
    for (Index i = 0; i < scores.rows(); ++i) {
        Index best = 0;
        for (Index c = 1; c < scores.cols(); ++c)
            if (scores(i, c) > scores(i, best) ||
                (scores(i, c) == scores(i, best) && classes[static_cast<std::size_t>(c)] < classes[static_cast<std::size_t>(best)]))
                best = c;
        out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(best)];
    }
    return out;
}

std::vector<int> distinct_classes(std::span<const int> Y) {
    std::set<int> s(Y.begin(), Y.end());
    return {s.begin(), s.end()};
}

TrainedModel fit(const ClassifierSpec& spec, const Matrix& X, std::span<const int> Y) {
    spec.validate();
    if (X.rows() != static_cast<Index>(Y.size())) throw ShapeError("fit: X rows != label count");
    if (!X.allFinite()) throw Error("fit: NaN or infinite feature value");
    for (int y : Y)
        if (y < 1) throw Error("fit: label " + std::to_string(y) + " is not a class code");
    auto classes = distinct_classes(Y);
    if (classes.size() < 2) throw Error("fit: need at least two classes, got " + std::to_string(classes.size()));

    Standardizer st(X);
    const Matrix Z = st.transform(X);
    std::vector<int> yi(Y.size());
    for (std::size_t i = 0; i < Y.size(); ++i)
        yi[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), Y[i]) - classes.begin());
    const int K = static_cast<int>(classes.size());

    std::shared_ptr<const detail::ModelCore> core;
    switch (spec.kind) {
        case ClassifierKind::kNN:
            core = detail::fit_knn(Z, yi, K, static_cast<int>(spec.get("k")));
            break;
        case ClassifierKind::DT:
            core = detail::fit_tree(Z, yi, K, static_cast<int>(spec.get("max_depth")),
                                    static_cast<int>(spec.get("min_leaf")));
            break;
        case ClassifierKind::GB:
            core = detail::fit_gb(Z, yi, K, static_cast<int>(spec.get("n_trees")),
                                  static_cast<int>(spec.get("depth")), spec.get("learning_rate"),
                                  static_cast<int>(spec.get("min_leaf")));
            break;
        case ClassifierKind::SVML:
            core = detail::fit_svm(Z, yi, K, Kernel{KernelType::Linear, 0.0}, spec.get("C"));
            break;
        case ClassifierKind::SVMR: {
            double gamma = spec.get("gamma");
            if (gamma <= 0.0) gamma = 1.0 / static_cast<double>(std::max<Index>(1, X.cols()));
            core = detail::fit_svm(Z, yi, K, Kernel{KernelType::Rbf, gamma}, spec.get("C"));
            break;
        }
    }
    return TrainedModel(spec, std::move(st), std::move(classes), std::move(core));
}

}  // namespace pmussl
