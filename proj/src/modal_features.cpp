#include "pmussl/modal_features.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <thread>

namespace pmussl {

using cd = std::complex<double>;

void ExtractionConfig::validate(Index pmu_count, Index sample_count) const {
    const int L = pencil_for(sample_count);
    if (modes < 1) throw ConfigError("extraction.p must be >= 1");
    if (L < modes) throw ConfigError("extraction: pencil L must be >= p");
    if (L > sample_count - 1) throw ConfigError("extraction: pencil L must be <= N - 1");
    if (retained_pmus < 1) throw ConfigError("extraction.m_prime must be >= 1");
    if (retained_pmus > pmu_count)
        throw ConfigError("extraction: m_prime (" + std::to_string(retained_pmus) +
                          ") exceeds PMU count (" + std::to_string(pmu_count) + ")");
    if (!(rank_tol > 0.0) || rank_tol >= 1.0) throw ConfigError("extraction.rank_tol must be in (0,1)");
}

Matrix build_block_hankel(const Matrix& Y, int L) {
    const Index m = Y.rows();
    const Index N = Y.cols();
    if (L < 0 || L >= N)
        throw ShapeError("build_block_hankel: need 0 <= L < N (L=" + std::to_string(L) +
                         ", N=" + std::to_string(N) + ")");
    const Index rows = N - L;
    Matrix H(m * rows, L + 1);
    for (Index i = 0; i < m; ++i)
        for (Index a = 0; a < rows; ++a)
            for (Index b = 0; b <= L; ++b) H(i * rows + a, b) = Y(i, a + b);
    return H;
}

Matrix prepare_channel(const Matrix& Y, const ExtractionConfig& cfg) {
    if (!cfg.detrend) return Y;
    Matrix out = Y;
    out.colwise() -= Y.rowwise().mean();
    return out;
}

namespace {

// Right singular vectors of H via thin QR followed by an SVD of R.
Eigen::BDCSVD<Matrix> hankel_svd(const Matrix& H) {
    if (H.rows() > 2 * H.cols()) {
        Eigen::HouseholderQR<Matrix> qr(H);
        Matrix R = qr.matrixQR().topRows(H.cols()).triangularView<Eigen::Upper>();
        return Eigen::BDCSVD<Matrix>(R, Eigen::ComputeThinV);
    }
    return Eigen::BDCSVD<Matrix>(H, Eigen::ComputeThinV);
}

double wrap_angle(double a) {
    // (-pi, pi]
    if (a <= -std::numbers::pi) a += 2 * std::numbers::pi;
    if (a > std::numbers::pi) a -= 2 * std::numbers::pi;
    return a;
}

}  // namespace

ModeSet estimate_modes(const Matrix& Yraw, const ExtractionConfig& cfg, double Ts,
                       Channel channel) {
    const Index m = Yraw.rows();
    const Index N = Yraw.cols();
    if (m < 1) throw ShapeError("estimate_modes: empty channel matrix");
    if (!(Ts > 0.0)) throw ConfigError("estimate_modes: sample period must be > 0");
    // m' is irrelevant at this stage
    ExtractionConfig check = cfg;
    check.retained_pmus = 1;
    check.validate(m, N);

    const Matrix Y = prepare_channel(Yraw, cfg);
    const int L = cfg.pencil_for(N);

    ModeSet ms;
    ms.channel = channel;
    ms.configured_modes = cfg.modes;
    ms.magnitude.resize(m, 0);
    ms.angle.resize(m, 0);

    const Matrix H = build_block_hankel(Y, L);
    const auto svd = hankel_svd(H);
    const Vector& s = svd.singularValues();
    int rank = 0;
    if (s.size() > 0 && s[0] > 0.0) {
        const double floor = cfg.rank_tol * s[0];
        while (rank < cfg.modes && rank < s.size() && s[rank] > floor) ++rank;
    }
    ms.pencil_rank = rank;
    if (rank == 0) return ms;

    // shift invariance of the signal subspace: V2 = V1 * Phi, eig(Phi) = poles
    const Matrix Vp = svd.matrixV().leftCols(rank);
    const Matrix V1 = Vp.topRows(L);
    const Matrix V2 = Vp.bottomRows(L);
    const Matrix Phi = V1.colPivHouseholderQr().solve(V2);
    Eigen::EigenSolver<Matrix> es(Phi, false);
    const Eigen::VectorXcd poles = es.eigenvalues();

    // residues: least squares of each stream against the Vandermonde basis
    Eigen::MatrixXcd V(N, rank);
    for (Index k = 0; k < rank; ++k) {
        cd zn(1.0, 0.0);
        for (Index n = 0; n < N; ++n) {
            V(n, k) = zn;
            zn *= poles[k];
        }
    }
    const Eigen::MatrixXcd rhs = Y.transpose().cast<cd>();
    const Eigen::MatrixXcd C = V.colPivHouseholderQr().solve(rhs);  // rank x m

    struct Slot {
        double sigma, omega;
        Eigen::VectorXcd R;  // m
        double mean_mag;
    };
    std::vector<Slot> slots;
    for (Index k = 0; k < rank; ++k) {
        const cd z = poles[k];
        if (z.imag() < 0.0) continue;  // represented by its conjugate
        const double mag = std::max(std::abs(z), 1e-300);
        Slot sl;
        sl.sigma = std::log(mag) / Ts;
        sl.omega = std::abs(std::arg(z)) / Ts;
        if (z.imag() > 0.0) {
            sl.R = 2.0 * C.row(k).transpose();
        } else {
            sl.R = C.row(k).transpose().real().cast<cd>();
        }
        sl.mean_mag = sl.R.cwiseAbs().mean();
        slots.push_back(std::move(sl));
    }
    std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
        if (a.mean_mag != b.mean_mag) return a.mean_mag > b.mean_mag;
        if (a.omega != b.omega) return a.omega < b.omega;
        return a.sigma > b.sigma;
    });

    const auto p = static_cast<Index>(slots.size());
    ms.magnitude.resize(m, p);
    ms.angle.resize(m, p);
    for (Index k = 0; k < p; ++k) {
        const auto& sl = slots[static_cast<std::size_t>(k)];
        ms.sigma.push_back(sl.sigma);
        ms.omega.push_back(sl.omega);
        for (Index i = 0; i < m; ++i) {
            ms.magnitude(i, k) = std::abs(sl.R[i]);
            ms.angle(i, k) = ms.magnitude(i, k) > 0.0 ? wrap_angle(std::arg(sl.R[i])) : 0.0;
        }
    }
    return ms;
}

namespace {

Vector synthesize_row(const ModeSet& ms, Index pmu, double Ts, Index N) {
    Vector y = Vector::Zero(N);
    for (int k = 0; k < ms.mode_count(); ++k) {
        const cd lambda(ms.sigma[static_cast<std::size_t>(k)], ms.omega[static_cast<std::size_t>(k)]);
        const cd z = std::exp(lambda * Ts);
        const cd R = ms.residue(pmu, k);
        cd zn(1.0, 0.0);
        for (Index n = 0; n < N; ++n) {
            y[n] += std::real(R * zn);
            zn *= z;
        }
    }
    return y;
}

Vector reconstruction_error_impl(const Matrix& Y, const ModeSet& ms, double Ts, bool strict) {
    if (Y.rows() != ms.pmu_count() && ms.mode_count() > 0)
        throw ShapeError("reconstruction_error: PMU count differs from mode set");
    Vector err(Y.rows());
    for (Index i = 0; i < Y.rows(); ++i) {
        const double norm = Y.row(i).norm();
        if (norm == 0.0) {
            if (strict)
                throw Error("reconstruction_error: zero-norm stream at PMU " + std::to_string(i));
            err[i] = std::nan("");
            continue;
        }
        const Vector yhat = ms.mode_count() > 0 ? synthesize_row(ms, i, Ts, Y.cols())
                                                : Vector::Zero(Y.cols());
        err[i] = (Y.row(i).transpose() - yhat).norm() / norm;
    }
    return err;
}

}  // namespace

Vector reconstruction_error(const Matrix& Y, const ModeSet& ms, double Ts) {
    return reconstruction_error_impl(Y, ms, Ts, true);
}

std::vector<Index> rank_pmus(const ModeSet& ms) {
    std::vector<Index> order(static_cast<std::size_t>(ms.pmu_count()));
    std::iota(order.begin(), order.end(), Index{0});
    if (ms.mode_count() == 0) return order;
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return ms.magnitude(a, 0) > ms.magnitude(b, 0);
    });
    return order;
}

AssembledFeatures assemble_features(const std::array<ModeSet, 3>& sets, int p, int mprime) {
    if (p < 1 || mprime < 1) throw ConfigError("assemble_features: p and m' must be >= 1");
    AssembledFeatures out;
    out.values = Vector::Zero(feature_dimension(p, mprime));
    Index pos = 0;
    for (std::size_t c = 0; c < sets.size(); ++c) {
        const ModeSet& ms = sets[c];
        if (ms.mode_count() < 1)
            throw Error("assemble_features: channel " + std::string(channel_name(ms.channel)) +
                        " has no modes");
        if (mprime > ms.pmu_count())
            throw ConfigError("assemble_features: m' (" + std::to_string(mprime) +
                              ") exceeds PMU count (" + std::to_string(ms.pmu_count()) + ")");
        const int have = std::min(p, ms.mode_count());
        out.zero_filled[c] = have < p;
        for (int k = 0; k < have; ++k) out.values[pos + k] = ms.omega[static_cast<std::size_t>(k)];
        pos += p;
        for (int k = 0; k < have; ++k) out.values[pos + k] = ms.sigma[static_cast<std::size_t>(k)];
        pos += p;
        const auto order = rank_pmus(ms);
        for (int j = 0; j < mprime; ++j) {
            const Index i = order[static_cast<std::size_t>(j)];
            for (int k = 0; k < have; ++k) out.values[pos + k] = ms.magnitude(i, k);
            pos += p;
            for (int k = 0; k < have; ++k) out.values[pos + k] = ms.angle(i, k);
            pos += p;
        }
    }
    return out;
}

EventFeatures extract_event_features(const EventRecord& ev, const ExtractionConfig& cfg) {
    ev.validate();
    cfg.validate(ev.pmu_count(), ev.sample_count());
    const double Ts = 1.0 / ev.sample_rate_hz;
    EventFeatures ef;
    for (auto c : kAllChannels) {
        const auto ci = static_cast<std::size_t>(c);
        const Matrix Y = ev.channel_block(c);
        ef.modesets[ci] = estimate_modes(Y, cfg, Ts, c);
        const Vector err = reconstruction_error_impl(prepare_channel(Y, cfg), ef.modesets[ci], Ts, false);
        double sum = 0.0, mx = 0.0;
        Index cnt = 0;
        for (Index i = 0; i < err.size(); ++i)
            if (std::isfinite(err[i])) {
                sum += err[i];
                mx = std::max(mx, err[i]);
                ++cnt;
            }
        ef.mean_recon_error[ci] = cnt > 0 ? sum / static_cast<double>(cnt) : 0.0;
        ef.max_recon_error[ci] = mx;
    }
    auto assembled = assemble_features(ef.modesets, cfg.modes, cfg.retained_pmus);
    ef.values = std::move(assembled.values);
    ef.zero_filled = assembled.zero_filled;
    return ef;
}

FeatureDataset extract_dataset(std::span<const EventRecord> events, const ExtractionConfig& cfg,
                               std::vector<EventFeatures>* details, int jobs) {
    for (const auto& ev : events)
        if (ev.pmu_count() < cfg.retained_pmus)
            throw ConfigError("event '" + ev.event_id + "' has m=" + std::to_string(ev.pmu_count()) +
                              " PMUs, fewer than m_prime=" + std::to_string(cfg.retained_pmus));

    std::vector<EventFeatures> feats(events.size());
    std::vector<std::string> errors(events.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < events.size(); i = next++) {
            try {
                feats[i] = extract_event_features(events[i], cfg);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(events.size())));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    }
    for (std::size_t i = 0; i < events.size(); ++i)
        if (!errors[i].empty()) throw Error("event '" + events[i].event_id + "': " + errors[i]);

    FeatureDataset ds;
    ds.modes_per_channel = cfg.modes;
    ds.retained_pmus = cfg.retained_pmus;
    ds.feature_names = feature_names(cfg.modes, cfg.retained_pmus);
    ds.X.resize(static_cast<Index>(events.size()), feature_dimension(cfg.modes, cfg.retained_pmus));
    for (std::size_t i = 0; i < events.size(); ++i) {
        ds.X.row(static_cast<Index>(i)) = feats[i].values.transpose();
        ds.Y.push_back(events[i].label ? class_code(*events[i].label) : kUnlabeled);
        ds.event_ids.push_back(events[i].event_id);
    }
    if (details) *details = std::move(feats);
    ds.validate();
    return ds;
}

}  // namespace pmussl
