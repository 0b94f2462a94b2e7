#include "treegen/qpnn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

namespace treegen::qpnn {

using fock::BasisPtr;
using fock::Complex;
using fock::Vector;

QPNN QPNN::ideal(int modes, int layers) {
    QPNN net;
    net.modes = modes;
    net.layers = layers;
    for (int i = 0; i < layers; ++i) {
        net.params.push_back(mesh::MeshParams::zeros(modes));
        net.instances.push_back(mesh::MeshInstance::ideal(modes));
    }
    return net;
}

QPNN QPNN::sampled(int modes, int layers, const mesh::HardwareModel& hardware, Rng& rng) {
    QPNN net;
    net.modes = modes;
    net.layers = layers;
    for (int i = 0; i < layers; ++i) {
        net.params.push_back(mesh::MeshParams::zeros(modes));
        net.instances.push_back(mesh::MeshInstance::sampled(modes, hardware, rng));
    }
    return net;
}

std::vector<double> QPNN::flat_params() const {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(param_count()));
    for (const auto& p : params) {
        flat.insert(flat.end(), p.phi.begin(), p.phi.end());
        flat.insert(flat.end(), p.theta.begin(), p.theta.end());
        flat.insert(flat.end(), p.screen.begin(), p.screen.end());
    }
    return flat;
}

void QPNN::set_flat_params(const std::vector<double>& flat) {
    if (flat.size() != static_cast<std::size_t>(param_count()))
        throw std::invalid_argument("set_flat_params: size mismatch");
    std::size_t k = 0;
    for (auto& p : params) {
        for (auto& v : p.phi) v = flat[k++];
        for (auto& v : p.theta) v = flat[k++];
        for (auto& v : p.screen) v = flat[k++];
    }
}

StateVector system_apply(const QPNN& net, const StateVector& state) {
    if (state.basis->modes() != net.modes)
        throw std::invalid_argument("system_apply: mode count mismatch");
    StateVector cur = state;
    for (int i = 0; i < net.layers; ++i) {
        Matrix u = mesh::build_mesh(net.params[static_cast<std::size_t>(i)],
                                    net.instances[static_cast<std::size_t>(i)]);
        cur = fock::apply_linear(u, cur);
        if (i + 1 < net.layers)
            fock::apply_nonlinearity_inplace(cur.amps, *cur.basis, net.phi1, net.phi2);
    }
    return cur;
}

namespace {

// Training pairs grouped by photon-number sector so each sector evolves as
// one dense block.
struct SectorGroup {
    int photons = 0;
    BasisPtr basis;
    BasisPtr lowered;  // photons-1 sector
    std::vector<std::size_t> pair_index;
    Matrix inputs;   // dim x K_n
    Matrix targets;  // dim x K_n
    Vector phase;            // nonlinear screen, unit modulus per basis state
    std::vector<std::vector<std::size_t>> cb_indices;  // per pair
};

struct PreparedSet {
    std::vector<SectorGroup> groups;
    std::size_t total_pairs = 0;
};

Vector nonlinear_phase(const fock::FockBasis& basis, double phi1, double phi2) {
    Vector d(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
        double phase = 0.0;
        for (int v : basis.state(i))
            if (v >= 1) phase += phi1 + (v - 1) * phi2;
        d(static_cast<Eigen::Index>(i)) = std::polar(1.0, phase);
    }
    return d;
}

PreparedSet prepare(const QPNN& net, const std::vector<TrainingPair>& set) {
    if (set.empty()) throw std::invalid_argument("qpnn: empty training set");
    PreparedSet prep;
    prep.total_pairs = set.size();
    std::map<int, std::vector<std::size_t>> by_n;
    for (std::size_t k = 0; k < set.size(); ++k) {
        if (set[k].input.basis->modes() != net.modes)
            throw std::invalid_argument("qpnn: pair mode count mismatch");
        by_n[set[k].input.basis->photons()].push_back(k);
    }
    for (auto& [n, idx] : by_n) {
        SectorGroup g;
        g.photons = n;
        g.basis = fock::basis_of(net.modes, n);
        g.lowered = (n >= 1) ? fock::basis_of(net.modes, n - 1) : nullptr;
        g.pair_index = idx;
        g.inputs.resize(g.basis->size(), idx.size());
        g.targets.resize(g.basis->size(), idx.size());
        for (std::size_t c = 0; c < idx.size(); ++c) {
            g.inputs.col(static_cast<Eigen::Index>(c)) = set[idx[c]].input.amps;
            g.targets.col(static_cast<Eigen::Index>(c)) = set[idx[c]].target.amps;
            auto cb = fock::computational_basis(set[idx[c]].config);
            g.cb_indices.push_back(cb.indices);
        }
        g.phase = nonlinear_phase(*g.basis, net.phi1, net.phi2);
        prep.groups.push_back(std::move(g));
    }
    return prep;
}

// Per-epoch evaluation state: mesh products per layer and the per-sector
// lifted transfer matrices they induce (shared across groups, since a
// group's lowered sector is the next group's full one).
struct Evaluation {
    std::vector<mesh::MeshProducts> meshes;          // per layer
    std::map<int, std::vector<Matrix>> sector;       // photons -> per-layer transfer
    std::vector<Matrix> forward;                     // [group*L + i]: state entering layer i
    std::vector<Matrix> post;                        // [group*L + i]: Phi_i * forward_i
    std::vector<Vector> amplitudes;                  // per group: A_k
};

void forward_pass(const QPNN& net, const PreparedSet& prep, bool with_lowered, Evaluation& ev) {
    const int L = net.layers;
    ev.meshes.clear();
    for (int i = 0; i < L; ++i)
        ev.meshes.push_back(mesh::build_mesh_products(net.params[static_cast<std::size_t>(i)],
                                                      net.instances[static_cast<std::size_t>(i)]));
    std::set<int> sectors;
    for (const auto& g : prep.groups) {
        sectors.insert(g.photons);
        if (with_lowered) sectors.insert(g.photons - 1);
    }
    ev.sector.clear();
    for (int n : sectors) {
        auto basis = fock::basis_of(net.modes, n);
        std::vector<Matrix> per_layer(static_cast<std::size_t>(L));
        for (int i = 0; i < L; ++i)
            per_layer[static_cast<std::size_t>(i)] =
                fock::transfer_matrix_fast(ev.meshes[static_cast<std::size_t>(i)].full, *basis);
        ev.sector[n] = std::move(per_layer);
    }
    ev.forward.assign(prep.groups.size() * static_cast<std::size_t>(L), Matrix());
    ev.post.assign(prep.groups.size() * static_cast<std::size_t>(L), Matrix());
    ev.amplitudes.assign(prep.groups.size(), Vector());

    for (std::size_t gi = 0; gi < prep.groups.size(); ++gi) {
        const SectorGroup& g = prep.groups[gi];
        const auto& lifts = ev.sector.at(g.photons);
        Matrix cur = g.inputs;
        for (int i = 0; i < L; ++i) {
            ev.forward[gi * L + i] = cur;
            Matrix out = lifts[static_cast<std::size_t>(i)] * cur;
            ev.post[gi * L + i] = out;
            if (i + 1 < L) cur = g.phase.asDiagonal() * out;
            else cur = out;
        }
        Vector amps(g.pair_index.size());
        for (std::size_t c = 0; c < g.pair_index.size(); ++c)
            amps(static_cast<Eigen::Index>(c)) =
                g.targets.col(static_cast<Eigen::Index>(c)).dot(cur.col(static_cast<Eigen::Index>(c)));
        ev.amplitudes[gi] = amps;
    }
}

double cost_from(const PreparedSet& prep, const Evaluation& ev) {
    double sum = 0.0;
    for (std::size_t gi = 0; gi < prep.groups.size(); ++gi)
        sum += ev.amplitudes[gi].squaredNorm();
    double c = 1.0 - sum / static_cast<double>(prep.total_pairs);
    // Rounding can push the value a few ulps outside [0,1].
    return std::clamp(c, 0.0, 1.0);
}

// Lower a block of states on every mode: returns dim_{n-1} x (m*K) with the
// mode index fastest.
Matrix lower_block(const Matrix& block, const fock::FockBasis& basis, const fock::FockBasis& lowered) {
    const int m = basis.modes();
    const Eigen::Index k_count = block.cols();
    Matrix out = Matrix::Zero(lowered.size(), static_cast<Eigen::Index>(m) * k_count);
    for (std::size_t s = 0; s < basis.size(); ++s) {
        const fock::Occupation& occ = basis.state(s);
        fock::Occupation low = occ;
        for (int mode = 0; mode < m; ++mode) {
            if (occ[mode] == 0) continue;
            low[mode] -= 1;
            std::size_t t = lowered.index_of(low);
            low[mode] += 1;
            double w = std::sqrt(double(occ[mode]));
            for (Eigen::Index c = 0; c < k_count; ++c)
                out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(mode) * k_count + c) +=
                    w * block(static_cast<Eigen::Index>(s), c);
        }
    }
    return out;
}

void accumulate_gradient(const QPNN& net, const PreparedSet& prep, const Evaluation& ev,
                         std::vector<double>& grad) {
    const int L = net.layers;
    const int m = net.modes;
    const int units = mesh::mesh_unit_count(m);
    const int per_layer = 2 * units + m;
    const double scale = -2.0 / static_cast<double>(prep.total_pairs);
    grad.assign(static_cast<std::size_t>(net.param_count()), 0.0);

    for (int i = 0; i < L; ++i) {
        // M = sum_k conj(A_k) G_k with G_k[a][b] = <a_a lambda | Phi_{n-1} | a_b psi>.
        Matrix m_sens = Matrix::Zero(m, m);
        for (std::size_t gi = 0; gi < prep.groups.size(); ++gi) {
            const SectorGroup& g = prep.groups[gi];
            const Eigen::Index kn = static_cast<Eigen::Index>(g.pair_index.size());
            const auto& lifts = ev.sector.at(g.photons);
            // Backward state entering this layer from the target side.
            Matrix lambda = g.targets;
            for (int j = L - 1; j > i; --j) {
                Matrix stepped = lifts[static_cast<std::size_t>(j)].adjoint() * lambda;
                lambda = g.phase.conjugate().asDiagonal() * stepped;
            }
            const Matrix& psi = ev.forward[gi * L + i];
            const fock::FockBasis& lowered = *g.lowered;
            Matrix low_psi = lower_block(psi, *g.basis, lowered);
            Matrix low_lambda = lower_block(lambda, *g.basis, lowered);
            Matrix w = ev.sector.at(g.photons - 1)[static_cast<std::size_t>(i)] * low_psi;
            for (Eigen::Index c = 0; c < kn; ++c) {
                Complex abar = std::conj(ev.amplitudes[gi](c));
                for (int a = 0; a < m; ++a)
                    for (int b = 0; b < m; ++b)
                        m_sens(a, b) += abar * low_lambda.col(static_cast<Eigen::Index>(a) * kn + c)
                                                   .dot(w.col(static_cast<Eigen::Index>(b) * kn + c));
            }
        }

        const mesh::MeshProducts& mp = ev.meshes[static_cast<std::size_t>(i)];
        const mesh::MeshInstance& inst = net.instances[static_cast<std::size_t>(i)];
        const mesh::MeshParams& par = net.params[static_cast<std::size_t>(i)];
        std::vector<Matrix> z(static_cast<std::size_t>(m));
        for (int c = 0; c < m; ++c)
            z[static_cast<std::size_t>(c)] = mp.suffix[static_cast<std::size_t>(c)].transpose() *
                                             m_sens * mp.prefix[static_cast<std::size_t>(c)].transpose();

        double* gphi = grad.data() + static_cast<std::size_t>(i) * per_layer;
        double* gtheta = gphi + units;
        double* gscreen = gtheta + units;

        for (int u = 0; u < units; ++u) {
            const mesh::GridSlot& slot = inst.grid[static_cast<std::size_t>(u)];
            const mesh::SampledUnit& su = inst.units[static_cast<std::size_t>(u)];
            double theta = par.theta[static_cast<std::size_t>(u)];
            double phi = par.phi[static_cast<std::size_t>(u)];
            Eigen::Matrix2cd dc1 = mesh::coupler_transfer(su.t1, false);
            Eigen::Matrix2cd dc2 = mesh::coupler_transfer(su.t2, true);
            double amp = std::pow(10.0, -su.loss_db / 20.0);
            Eigen::Matrix2cd inner = Eigen::Matrix2cd::Zero();
            inner(0, 0) = std::polar(1.0, 2.0 * theta);
            inner(1, 1) = 1.0;
            Eigen::Matrix2cd dinner = Eigen::Matrix2cd::Zero();
            dinner(0, 0) = Complex(0.0, 2.0) * std::polar(1.0, 2.0 * theta);
            Eigen::Matrix2cd ext = Eigen::Matrix2cd::Zero();
            ext(0, 0) = std::polar(1.0, phi);
            ext(1, 1) = 1.0;
            Eigen::Matrix2cd dext = Eigen::Matrix2cd::Zero();
            dext(0, 0) = Complex(0.0, 1.0) * std::polar(1.0, phi);
            Eigen::Matrix2cd dt_theta = amp * (dc2 * dinner * dc1 * ext);
            Eigen::Matrix2cd dt_phi = amp * (dc2 * inner * dc1 * dext);
            const Matrix& zc = z[static_cast<std::size_t>(slot.col)];
            Complex acc_theta(0.0, 0.0), acc_phi(0.0, 0.0);
            for (int r = 0; r < 2; ++r)
                for (int s = 0; s < 2; ++s) {
                    Complex zrs = zc(slot.pair + r, slot.pair + s);
                    acc_theta += dt_theta(r, s) * zrs;
                    acc_phi += dt_phi(r, s) * zrs;
                }
            gtheta[u] += scale * acc_theta.real();
            gphi[u] += scale * acc_phi.real();
        }
        for (int row = 0; row < m; ++row) {
            Complex acc(0.0, 0.0);
            for (int b = 0; b < m; ++b)
                acc += m_sens(row, b) * Complex(0.0, 1.0) * mp.full(row, b);
            gscreen[row] += scale * acc.real();
        }
    }
}

}  // namespace

double cost(const QPNN& net, const std::vector<TrainingPair>& set) {
    PreparedSet prep = prepare(net, set);
    Evaluation ev;
    forward_pass(net, prep, false, ev);
    return cost_from(prep, ev);
}

FidelityReport fidelity(const QPNN& net, const std::vector<TrainingPair>& set) {
    PreparedSet prep = prepare(net, set);
    Evaluation ev;
    forward_pass(net, prep, false, ev);
    FidelityReport report;
    std::map<std::string, std::pair<double, int>> per_op;
    double sum = 0.0;
    for (std::size_t gi = 0; gi < prep.groups.size(); ++gi) {
        const SectorGroup& g = prep.groups[gi];
        const int L = net.layers;
        const Matrix& out = (L > 0) ? ev.post[gi * L + (L - 1)] : g.inputs;
        for (std::size_t c = 0; c < g.pair_index.size(); ++c) {
            double num = std::norm(ev.amplitudes[gi](static_cast<Eigen::Index>(c)));
            double den = 0.0;
            for (std::size_t idx : g.cb_indices[c])
                den += std::norm(out(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(c)));
            if (den < 1e-15)
                throw std::runtime_error("fidelity: zero computational-basis projection on pair " +
                                         std::to_string(g.pair_index[c]));
            double f = num / den;
            sum += f;
            auto& slot = per_op[set[g.pair_index[c]].config.label()];
            slot.first += f;
            slot.second += 1;
        }
    }
    report.network = sum / static_cast<double>(prep.total_pairs);
    for (auto& [label, acc] : per_op)
        report.per_operation[label] = acc.first / acc.second;
    return report;
}

double loss_limit(const QPNN& net, const std::vector<TrainingPair>& set) {
    if (set.empty()) throw std::invalid_argument("loss_limit: empty training set");
    double mean_t = 0.0;
    std::size_t count = 0;
    for (const auto& inst : net.instances) {
        for (const auto& u : inst.units) {
            mean_t += std::pow(10.0, -u.loss_db / 10.0);
            ++count;
        }
    }
    mean_t = (count > 0) ? mean_t / static_cast<double>(count) : 1.0;
    double t_photon = std::pow(mean_t, net.modes * net.layers);
    double sum = 0.0;
    for (const auto& pair : set) sum += std::pow(t_photon, pair.input.basis->photons());
    return 1.0 - sum / static_cast<double>(set.size());
}

double cost_and_gradient(const QPNN& net, const std::vector<TrainingPair>& set,
                         std::vector<double>& grad) {
    PreparedSet prep = prepare(net, set);
    Evaluation ev;
    forward_pass(net, prep, true, ev);
    accumulate_gradient(net, prep, ev, grad);
    return cost_from(prep, ev);
}

std::vector<double> gradient(const QPNN& net, const std::vector<TrainingPair>& set) {
    std::vector<double> grad;
    cost_and_gradient(net, set, grad);
    return grad;
}

void TrainingConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainingConfig: epochs >= 1");
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainingConfig: learning rate > 0");
    if (decay <= 0.0 || decay > 1.0) throw std::invalid_argument("TrainingConfig: 0 < decay <= 1");
    if (decay_period < 1) throw std::invalid_argument("TrainingConfig: decay period >= 1");
    if (trials < 1) throw std::invalid_argument("TrainingConfig: trials >= 1");
}

const TrialResult& TrainSummary::best() const {
    if (best_trial < 0) throw std::runtime_error("TrainSummary: no successful trial");
    return trials[static_cast<std::size_t>(best_trial)];
}

TrialResult train_trial(const NetworkSpec& spec, const std::vector<TrainingPair>& set,
                        const TrainingConfig& config, int trial_index) {
    config.validate();
    TrialResult result;
    result.seed = config.seed ^ static_cast<std::uint64_t>(trial_index);
    Rng rng(result.seed);

    QPNN net = QPNN::sampled(spec.modes, spec.layers, spec.hardware, rng);
    net.phi1 = spec.phi1;
    net.phi2 = spec.phi2;
    for (int i = 0; i < spec.layers; ++i) {
        Matrix haar = mesh::haar_random_unitary(spec.modes, rng);
        net.params[static_cast<std::size_t>(i)] = mesh::clements_decompose(haar);
    }
    result.loss_limit = loss_limit(net, set);

    std::vector<double> params = net.flat_params();
    std::vector<double> best_params = params;
    std::vector<double> grad;
    std::vector<double> adam_m(params.size(), 0.0), adam_v(params.size(), 0.0);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    double best_cost = std::numeric_limits<double>::infinity();
    try {
        for (int epoch = 0; epoch < config.epochs; ++epoch) {
            double c = cost_and_gradient(net, set, grad);
            if (!std::isfinite(c))
                throw std::runtime_error("cost diverged (non-finite) at epoch " + std::to_string(epoch));
            result.trajectory.push_back(c);
            if (c < best_cost) {
                best_cost = c;
                best_params = params;
            }
            double lr = config.learning_rate *
                        std::pow(config.decay, static_cast<double>(epoch) / config.decay_period);
            double bc1 = 1.0 - std::pow(beta1, epoch + 1);
            double bc2 = 1.0 - std::pow(beta2, epoch + 1);
            for (std::size_t p = 0; p < params.size(); ++p) {
                adam_m[p] = beta1 * adam_m[p] + (1.0 - beta1) * grad[p];
                adam_v[p] = beta2 * adam_v[p] + (1.0 - beta2) * grad[p] * grad[p];
                params[p] -= lr * (adam_m[p] / bc1) / (std::sqrt(adam_v[p] / bc2) + eps);
            }
            net.set_flat_params(params);
        }
        double final_c = cost(net, set);
        if (!std::isfinite(final_c)) throw std::runtime_error("cost diverged (non-finite) at end");
        result.trajectory.push_back(final_c);
        if (final_c < best_cost) {
            best_cost = final_c;
            best_params = params;
        }
        net.set_flat_params(best_params);
        result.network = net;
        result.final_cost = best_cost;
        result.fidelities = fidelity(net, set);
        result.ok = true;
    } catch (const std::exception& e) {
        result.ok = false;
        result.message = e.what();
    }
    return result;
}

TrainSummary train(const NetworkSpec& spec, const std::vector<TrainingPair>& set,
                   const TrainingConfig& config) {
    config.validate();
    TrainSummary summary;
    summary.trials.resize(static_cast<std::size_t>(config.trials));
    int workers = std::max(1, std::min(config.threads, config.trials));
    if (workers == 1) {
        for (int t = 0; t < config.trials; ++t)
            summary.trials[static_cast<std::size_t>(t)] = train_trial(spec, set, config, t);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                while (true) {
                    int t = next.fetch_add(1);
                    if (t >= config.trials) break;
                    summary.trials[static_cast<std::size_t>(t)] = train_trial(spec, set, config, t);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    for (int t = 0; t < config.trials; ++t) {
        const TrialResult& r = summary.trials[static_cast<std::size_t>(t)];
        if (!r.ok) continue;
        if (summary.best_trial < 0 || r.final_cost < summary.trials[summary.best_trial].final_cost)
            summary.best_trial = t;
    }
    return summary;
}

double success_threshold(const std::string& preset, double loss_limit) {
    double factor = (preset == "single") ? 0.90 : 0.98;
    return 1.0 - factor * (1.0 - loss_limit);
}

}  // namespace treegen::qpnn
