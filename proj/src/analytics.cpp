#include "treegen/analytics.hpp"

#include <boost/math/distributions/beta.hpp>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace treegen::analytics {

EffectiveLoss effective_loss(const TreeShape& shape, double eps0) {
    if (eps0 < 0.0 || eps0 > 1.0) throw std::invalid_argument("effective_loss: eps0 outside [0,1]");
    const int d = shape.depth();
    auto branch = [&](int j) -> double {
        return (j >= 0 && j < d) ? static_cast<double>(shape.branch(j)) : 0.0;
    };
    // R_j: success probability of an indirect measurement on a row-j photon,
    // from the leaves upward. R_j = 0 for j >= d.
    std::vector<double> r(static_cast<std::size_t>(d) + 3, 0.0);
    for (int j = d - 1; j >= 1; --j) {
        double r_next = (j + 2 <= d) ? r[static_cast<std::size_t>(j + 2)] : 0.0;
        double inner = (1.0 - eps0) * std::pow(1.0 - eps0 + eps0 * r_next, branch(j + 1));
        r[static_cast<std::size_t>(j)] = 1.0 - std::pow(1.0 - inner, branch(j));
    }
    double r1 = (d >= 2) ? r[1] : 0.0;
    double r2 = (d >= 3) ? r[2] : 0.0;
    double b0 = branch(0);
    double b1 = branch(1);
    double p_ind = (std::pow(1.0 - eps0 + eps0 * r1, b0) - std::pow(eps0 * r1, b0)) *
                   std::pow(1.0 - eps0 + eps0 * r2, b1);
    EffectiveLoss out;
    out.p_indirect = p_ind;
    out.eps_eff = eps0 * (1.0 - p_ind);
    return out;
}

double LossBudget::survival() const { return std::pow(10.0, -total_db() / 10.0); }

std::vector<LossBudget> loss_budget(const Schedule& schedule, const GeneratorLayout& layout,
                                    const mesh::HardwareModel& hardware, NetSize net) {
    std::vector<LossBudget> out;
    out.reserve(schedule.paths.size());
    const double per_pass_mesh = net.modes * net.layers * hardware.mzi_loss_mean_db;
    const double per_crossing = layout.output_switch_stages * hardware.switch_loss_db_per_stage;
    for (const auto& p : schedule.paths) {
        LossBudget b;
        b.photon = p.photon;
        b.qpnn_passes = p.qpnn_passes;
        b.switch_crossings = p.switch_crossings;
        b.couplings = p.couplings;
        b.delay_fiber_m = p.delay_fiber_m;
        // The state-preparation MZI sits on every photon's path once.
        b.qpnn_db = p.qpnn_passes * per_pass_mesh + hardware.mzi_loss_mean_db;
        b.switch_db = p.switch_crossings * per_crossing;
        b.coupling_db = p.couplings * hardware.coupling_loss_db;
        b.delay_fiber_db = p.delay_fiber_m / 1000.0 * hardware.fiber_loss_db_per_km;
        out.push_back(b);
    }
    return out;
}

double generation_rate(const Schedule& schedule, const std::vector<LossBudget>& budgets) {
    if (budgets.size() != schedule.paths.size())
        throw std::invalid_argument("generation_rate: budgets do not cover all photons");
    double joint = 1.0;
    for (const auto& b : budgets) joint *= b.survival();
    double dt_T = static_cast<double>(schedule.span_steps) * schedule.dt_s;
    return joint / dt_T;
}

double mean_survival(const std::vector<LossBudget>& budgets) {
    double sum = 0.0;
    for (const auto& b : budgets) sum += b.survival();
    return sum / static_cast<double>(budgets.size());
}

int RepeaterScenario::nodes() const {
    double n = total_km / separation_km;
    int ni = static_cast<int>(std::llround(n));
    if (std::abs(n - ni) > 1e-9)
        throw std::invalid_argument("RepeaterScenario: total length must be a multiple of the separation");
    return ni;
}

double communication_rate(const TreeShape& shape, double eps0_at_node, int nodes, double dt_T) {
    double eps_eff = effective_loss(shape, eps0_at_node).eps_eff;
    return std::pow(1.0 - eps_eff, nodes) / dt_T;
}

double direct_photon_rate(const RepeaterScenario& scenario, const mesh::HardwareModel& hardware) {
    double hop = std::pow(10.0, -hardware.fiber_loss_db_per_km * scenario.separation_km / 10.0);
    return std::pow(hop, scenario.nodes()) / scenario.source_period_s;
}

namespace {

struct Candidate {
    TreeShape shape;
    std::int64_t n;
    double dt_T;
    double eps0;
    double eps_eff;
    double generation_hz;
};

Candidate evaluate_candidate(const TreeShape& shape, const mesh::HardwareModel& hardware,
                             double dt_s, double hop_km) {
    protocol::FiberSpec fiber{hardware.fiber_loss_db_per_km, hardware.group_index};
    Schedule sched = protocol::generate_schedule(shape, dt_s, 1, protocol::DelayMode::Dynamic, fiber);
    GeneratorLayout lay = protocol::layout(shape, dt_s, protocol::DelayMode::Dynamic, fiber);
    protocol::NetworkSize ns = protocol::required_network_size(shape);
    auto budgets = loss_budget(sched, lay, hardware, NetSize{ns.modes, ns.min_layers});
    Candidate c{shape, shape.photon_count(), static_cast<double>(sched.span_steps) * dt_s, 0.0, 0.0,
                0.0};
    double hop = std::pow(10.0, -hardware.fiber_loss_db_per_km * hop_km / 10.0);
    c.eps0 = 1.0 - mean_survival(budgets) * hop;
    c.eps_eff = effective_loss(shape, c.eps0).eps_eff;
    c.generation_hz = generation_rate(sched, budgets);
    return c;
}

// Branching entries below 2 give no per-photon redundancy, so the searches
// enumerate 2..max_branch.
void enumerate_shapes(int max_branch, int depth, std::vector<int>& cur,
                      std::vector<TreeShape>& out) {
    if (static_cast<int>(cur.size()) == depth) {
        out.emplace_back(cur);
        return;
    }
    for (int b = 2; b <= max_branch; ++b) {
        cur.push_back(b);
        enumerate_shapes(max_branch, depth, cur, out);
        cur.pop_back();
    }
}

std::vector<TreeShape> candidate_shapes(BranchingConstraint constraint, int max_branch,
                                        int max_depth) {
    std::vector<TreeShape> shapes;
    if (constraint == BranchingConstraint::TwoOnly) {
        for (int d = 1; d <= max_depth; ++d)
            shapes.emplace_back(std::vector<int>(static_cast<std::size_t>(d), 2));
    } else {
        for (int d = 1; d <= max_depth; ++d) {
            std::vector<int> cur;
            enumerate_shapes(max_branch, d, cur, shapes);
        }
    }
    return shapes;
}

}  // namespace

std::vector<RepeaterPoint> optimize_repeater(const mesh::HardwareModel& hardware,
                                             const RepeaterScenario& scenario,
                                             BranchingConstraint constraint,
                                             const std::vector<double>& lengths_km) {
    auto shapes = candidate_shapes(constraint, scenario.max_branch, scenario.max_depth);
    std::vector<Candidate> candidates;
    candidates.reserve(shapes.size());
    for (const auto& s : shapes)
        candidates.push_back(
            evaluate_candidate(s, hardware, scenario.source_period_s, scenario.separation_km));

    std::vector<RepeaterPoint> out;
    for (double length : lengths_km) {
        RepeaterScenario sc = scenario;
        sc.total_km = length;
        int nodes = sc.nodes();
        const Candidate* best = nullptr;
        double best_rate = -1.0;
        for (const auto& c : candidates) {
            double rate = std::pow(1.0 - c.eps_eff, nodes) / c.dt_T;
            bool better = rate > best_rate;
            if (!better && best && rate == best_rate) {
                better = (c.n < best->n) ||
                         (c.n == best->n && c.shape.branching() < best->shape.branching());
            }
            if (better) {
                best = &c;
                best_rate = rate;
            }
        }
        RepeaterPoint p{length, nodes, best->shape, {}, direct_photon_rate(sc, hardware)};
        p.metrics.n = best->n;
        p.metrics.dt_T = best->dt_T;
        p.metrics.eps0 = best->eps0;
        p.metrics.eps_eff = best->eps_eff;
        p.metrics.repetition_hz = 1.0 / best->dt_T;
        p.metrics.generation_hz = best->generation_hz;
        p.metrics.communication_hz = best_rate;
        out.push_back(p);
    }
    return out;
}

TreeMetrics tree_metrics(const TreeShape& shape, const mesh::HardwareModel& hardware, double dt_s,
                         int sources, protocol::DelayMode mode, double channel_km) {
    protocol::FiberSpec fiber{hardware.fiber_loss_db_per_km, hardware.group_index};
    Schedule sched = protocol::generate_schedule(shape, dt_s, sources, mode, fiber);
    GeneratorLayout lay = protocol::layout(shape, dt_s, mode, fiber);
    protocol::NetworkSize ns = protocol::required_network_size(shape);
    auto budgets = loss_budget(sched, lay, hardware, NetSize{ns.modes, ns.min_layers});
    TreeMetrics m;
    m.n = shape.photon_count();
    m.dt_T = static_cast<double>(sched.span_steps) * dt_s;
    double hop = std::pow(10.0, -hardware.fiber_loss_db_per_km * channel_km / 10.0);
    m.eps0 = 1.0 - mean_survival(budgets) * hop;
    m.eps_eff = effective_loss(shape, m.eps0).eps_eff;
    m.repetition_hz = 1.0 / m.dt_T;
    m.generation_hz = generation_rate(sched, budgets);
    m.communication_hz = m.repetition_hz * (1.0 - m.eps_eff);
    return m;
}

EmitterModel EmitterModel::qd() { return {"qd", 2.0 * M_PI * 80e9, 0.004e-3}; }
EmitterModel EmitterModel::siv() { return {"SiV", 2.0 * M_PI * 0.1e9, 10e-3}; }
EmitterModel EmitterModel::atom() { return {"atom", 2.0 * M_PI * 10e9, 1000e-3}; }

EmitterModel EmitterModel::preset(const std::string& name) {
    if (name == "qd") return qd();
    if (name == "SiV" || name == "siv") return siv();
    if (name == "atom") return atom();
    throw std::invalid_argument("unknown emitter preset: " + name);
}

double emitter_total_time(const TreeShape& shape, double dt_s) {
    const int d = shape.depth();
    double p = static_cast<double>(shape.product_all());
    double p_minus = static_cast<double>(shape.product_all()) /
                     static_cast<double>(shape.branch(d - 1));
    return ((p + p_minus - 1.0) + d * (p + p_minus)) * dt_s;
}

std::vector<ComparisonRow> comparison_curves(double eps0, int max_depth, int max_branch,
                                             double qpnn_dt_s) {
    std::vector<ComparisonRow> rows;
    double best_so_far = 1.0 + 1e-12;
    for (int depth = 1; depth <= max_depth; ++depth) {
        std::vector<TreeShape> shapes;
        std::vector<int> cur;
        enumerate_shapes(max_branch, depth, cur, shapes);
        const TreeShape* best = nullptr;
        double best_eps = 2.0;
        for (const auto& s : shapes) {
            double e = effective_loss(s, eps0).eps_eff;
            if (e < best_eps) {
                best_eps = e;
                best = &s;
            }
        }
        ComparisonRow row{depth, *best, best->photon_count(), best_eps, false, 0.0, 0.0, 0.0, 0.0};
        if (best_eps < best_so_far) {
            row.marker = true;
            best_so_far = best_eps;
        }
        row.qpnn_rep_hz = 1.0 / total_time(*best, qpnn_dt_s);
        row.qd_rep_hz = 1.0 / emitter_total_time(*best, EmitterModel::qd().dt_s());
        row.siv_rep_hz = 1.0 / emitter_total_time(*best, EmitterModel::siv().dt_s());
        row.atom_rep_hz = 1.0 / emitter_total_time(*best, EmitterModel::atom().dt_s());
        rows.push_back(row);
    }
    return rows;
}

double success_threshold_factor(const std::string& preset) {
    return (preset == "single") ? 0.90 : 0.98;
}

FidelityStats FidelityStats::tree(std::int64_t n) const {
    FidelityStats t = *this;
    t.mean = std::pow(mean, static_cast<double>(n));
    t.ci_low = std::pow(ci_low, static_cast<double>(n));
    t.ci_high = std::pow(ci_high, static_cast<double>(n));
    return t;
}

FidelityStats fit_fidelity_stats(const std::vector<double>& final_costs,
                                 const std::vector<double>& fidelities, double loss_limit,
                                 const std::string& preset) {
    if (final_costs.size() != fidelities.size())
        throw std::invalid_argument("fit_fidelity_stats: costs and fidelities must align");
    FidelityStats stats;
    stats.threshold = 1.0 - success_threshold_factor(preset) * (1.0 - loss_limit);
    std::vector<double> kept;
    for (std::size_t i = 0; i < final_costs.size(); ++i)
        if (final_costs[i] <= stats.threshold) kept.push_back(fidelities[i]);
    stats.survivors = static_cast<int>(kept.size());
    if (stats.survivors < 5)
        throw std::runtime_error("fit_fidelity_stats: only " + std::to_string(stats.survivors) +
                                 " trials below threshold, need at least 5");
    double mean = 0.0;
    for (double f : kept) mean += f;
    mean /= kept.size();
    double var = 0.0;
    for (double f : kept) var += (f - mean) * (f - mean);
    var /= kept.size();
    stats.mean = mean;
    if (var < 1e-18) {
        stats.degenerate = true;
        stats.ci_low = stats.ci_high = mean;
        return stats;
    }
    double common = mean * (1.0 - mean) / var - 1.0;
    if (common <= 0.0)
        throw std::runtime_error("fit_fidelity_stats: sample variance too large for a beta fit");
    stats.alpha = mean * common;
    stats.beta = (1.0 - mean) * common;
    boost::math::beta_distribution<double> dist(stats.alpha, stats.beta);
    stats.mean = boost::math::mean(dist);
    stats.ci_low = boost::math::quantile(dist, 0.025);
    stats.ci_high = boost::math::quantile(dist, 0.975);
    return stats;
}

}  // namespace treegen::analytics
