#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "treegen/mesh.hpp"
#include "treegen/protocol.hpp"

namespace treegen::analytics {

using protocol::GeneratorLayout;
using protocol::Schedule;
using protocol::TreeShape;

struct EffectiveLoss {
    double eps_eff = 0.0;
    double p_indirect = 0.0;  // recovery probability of a lost root's outcome
};

// Loss-tolerant tree encoding: the logical information survives if the root
// photon arrives, or if it was lost and its outcome is recovered indirectly
// from the surviving subtree (recursive stabilizer measurements).
EffectiveLoss effective_loss(const TreeShape& shape, double eps0);

struct LossBudget {
    protocol::PhotonLabel photon;
    int qpnn_passes = 0;
    int switch_crossings = 0;
    int couplings = 0;
    double delay_fiber_m = 0.0;
    double qpnn_db = 0.0;       // mesh columns per pass plus the prep MZI
    double switch_db = 0.0;
    double coupling_db = 0.0;
    double delay_fiber_db = 0.0;
    double channel_db = 0.0;

    double total_db() const {
        return qpnn_db + switch_db + coupling_db + delay_fiber_db + channel_db;
    }
    double survival() const;  // 10^(-total/10)
};

struct NetSize {
    int modes = 0;
    int layers = 0;
};

// Per-photon itemized budget read off the schedule's path records.
std::vector<LossBudget> loss_budget(const Schedule& schedule, const GeneratorLayout& layout,
                                    const mesh::HardwareModel& hardware, NetSize net);

// Joint survival of every photon times the repetition rate.
double generation_rate(const Schedule& schedule, const std::vector<LossBudget>& budgets);

double mean_survival(const std::vector<LossBudget>& budgets);

struct RepeaterScenario {
    double separation_km = 5.0;
    double total_km = 0.0;
    int max_branch = 4;
    int max_depth = 6;
    double source_period_s = 10e-9;

    int nodes() const;  // total/separation, must divide evenly
};

double communication_rate(const TreeShape& shape, double eps0_at_node, int nodes, double dt_T);

// Rate of sending bare photons through the same chain, the benchmark line.
double direct_photon_rate(const RepeaterScenario& scenario, const mesh::HardwareModel& hardware);

struct TreeMetrics {
    std::int64_t n = 0;
    double dt_T = 0.0;
    double eps0 = 0.0;     // per-photon loss at the next node (generator + hop)
    double eps_eff = 0.0;
    double repetition_hz = 0.0;
    double generation_hz = 0.0;
    double communication_hz = 0.0;
};

struct RepeaterPoint {
    double length_km = 0.0;
    int nodes = 0;
    TreeShape shape;
    TreeMetrics metrics;
    double direct_hz = 0.0;
};

enum class BranchingConstraint { TwoOnly, Free };

// Exhaustive search over branching vectors (entries 2..max_branch) for the
// shape maximizing the communication rate at each channel length. Ties break
// to fewer photons, then lexicographically smaller vectors.
std::vector<RepeaterPoint> optimize_repeater(const mesh::HardwareModel& hardware,
                                             const RepeaterScenario& scenario,
                                             BranchingConstraint constraint,
                                             const std::vector<double>& lengths_km);

// Generator-only metrics for a single tree (no repeater chain).
TreeMetrics tree_metrics(const TreeShape& shape, const mesh::HardwareModel& hardware,
                         double dt_s, int sources = 1,
                         protocol::DelayMode mode = protocol::DelayMode::Dynamic,
                         double channel_km = 0.0);

struct EmitterModel {
    std::string name;
    double gamma_r = 0.0;  // CZ gate bandwidth, rad/s
    double t_coh = 0.0;    // seconds; carried but unused here

    double gamma_l() const { return 0.001 * gamma_r; }
    double dt_s() const { return 6.0 / gamma_l(); }

    static EmitterModel qd();
    static EmitterModel siv();
    static EmitterModel atom();
    static EmitterModel preset(const std::string& name);
};

// Sequential-emitter protocol span: (P + P' - 1 + d (P + P')) dt with
// P = prod b, P' = prod of all but the last element.
double emitter_total_time(const TreeShape& shape, double dt_s);

struct ComparisonRow {
    int depth = 0;
    TreeShape shape;
    std::int64_t n = 0;
    double eps_eff = 0.0;
    bool marker = false;  // new minimum of the effective loss
    double qpnn_rep_hz = 0.0;
    double qd_rep_hz = 0.0;
    double siv_rep_hz = 0.0;
    double atom_rep_hz = 0.0;
};

// Per-depth best shapes under a fixed per-photon loss; emitter repetition
// rates come from the sequential protocol and carry no decoherence
// correction (flagged by the caller-facing docs).
std::vector<ComparisonRow> comparison_curves(double eps0, int max_depth = 8, int max_branch = 4,
                                             double qpnn_dt_s = 10e-9);

struct FidelityStats {
    double threshold = 0.0;
    int survivors = 0;
    bool degenerate = false;
    double alpha = 0.0;
    double beta = 0.0;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;

    // F^n with the confidence interval propagated through the monotone map.
    FidelityStats tree(std::int64_t n) const;
};

double success_threshold_factor(const std::string& preset);

// Threshold failed trials away, then fit a beta distribution to the
// surviving fidelities by the method of moments; the 95% interval comes from
// the fitted quantiles. Requires at least five survivors.
FidelityStats fit_fidelity_stats(const std::vector<double>& final_costs,
                                 const std::vector<double>& fidelities, double loss_limit,
                                 const std::string& preset);

}  // namespace treegen::analytics
