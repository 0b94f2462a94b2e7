#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace treegen::protocol {

constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct FiberSpec {
    double loss_db_per_km = 0.17;
    double group_index = 1.462;
};

// Branching vector [b_0 .. b_{d-1}]; row j holds prod_{k<j} b_k photons.
class TreeShape {
public:
    explicit TreeShape(std::vector<int> branching);

    int depth() const { return static_cast<int>(b_.size()); }
    int branch(int row) const { return b_[static_cast<std::size_t>(row)]; }
    const std::vector<int>& branching() const { return b_; }
    int max_branching() const;

    std::int64_t photons_in_row(int row) const;  // row 0..depth
    std::int64_t photon_count() const;           // 1 + sum over rows 1..d
    std::int64_t product_all() const;            // prod of all b_k
    // prod_{k=from}^{d-1} b_k, empty product = 1
    std::int64_t product_from(int from) const;

    std::string to_string() const;  // "2,4,2"
    static TreeShape parse(const std::string& text);

private:
    std::vector<int> b_;
};

std::int64_t photon_count(const TreeShape& shape);

// Protocol span in source periods: prod(b) * d.
std::int64_t total_time_steps(const TreeShape& shape);
double total_time(const TreeShape& shape, double dt_s);

// Delay of line i (1-based, i <= b_{j-1}) during the row-j stage, in source
// periods: prod(b) - (i-1) * prod_{k=j}^{d-1} b_k.
std::int64_t delay_steps(const TreeShape& shape, int line, int row);
double delay_time(const TreeShape& shape, int line, int row, double dt_s);
double delay_length_m(double delay_s, const FiberSpec& fiber = {});
double delay_loss_db(double delay_s, const FiberSpec& fiber = {});

enum class DelayMode { Dynamic, Static };

struct PhotonLabel {
    int row = 0;
    std::int64_t index = 0;
    auto operator<=>(const PhotonLabel&) const = default;
    std::string to_string() const;  // "(j,k)"
};

enum class EventKind { Emit, QpnnOp, Route, DelayOccupy, SwitchConfig, Idle };

struct Event {
    std::int64_t t = 0;  // in source periods
    EventKind kind = EventKind::Idle;
    std::vector<PhotonLabel> photons;
    int source = 0;        // Emit: source id
    int op_arity = 0;      // QpnnOp: photons acted on (1 = identity)
    int line = 0;          // Route/DelayOccupy: delay line id, 0 = generator output
    std::int64_t duration = 0;  // DelayOccupy: steps in the line
    int stage_row = -1;    // SwitchConfig: row whose stage begins
};

struct DelayTraversal {
    int line = 0;
    std::int64_t enter_t = 0;
    std::int64_t steps = 0;
    double meters = 0.0;
};

struct PathRecord {
    PhotonLabel photon;
    std::int64_t emit_t = 0;
    int source = 0;
    int qpnn_passes = 0;
    int switch_crossings = 0;
    int couplings = 0;  // chip<->fiber transitions incl. the final output one
    std::vector<DelayTraversal> delays;
    double delay_fiber_m = 0.0;
};

struct Edge {
    PhotonLabel parent;
    PhotonLabel child;
    auto operator<=>(const Edge&) const = default;
};

struct Schedule {
    TreeShape shape;
    double dt_s = 0.0;
    int sources = 1;
    DelayMode mode = DelayMode::Dynamic;
    std::int64_t span_steps = 0;
    std::vector<Event> events;        // sorted by time
    std::vector<PathRecord> paths;    // one per photon
    std::vector<Edge> edges;          // entanglement edge set

    const PathRecord& path(const PhotonLabel& label) const;
};

// Deterministic event list for the generation protocol. sources = 3 is the
// unit-cell variant and requires an all-2 branching vector of depth >= 2.
Schedule generate_schedule(const TreeShape& shape, double dt_s, int sources = 1,
                           DelayMode mode = DelayMode::Dynamic, const FiberSpec& fiber = {});

struct DelayLine {
    int id = 0;
    std::int64_t max_steps = 0;  // longest delay the line must support
    double meters = 0.0;
    double loss_db = 0.0;
    bool retunable = false;
};

struct GeneratorLayout {
    double dt_s = 0.0;
    DelayMode mode = DelayMode::Dynamic;
    int delay_line_count = 0;  // N_d
    int output_switch_ports = 0;   // 1 x (N_d + 1)
    int output_switch_stages = 0;  // ceil(log2(2 N_d + 2)) - 1
    int input_switch_ports = 0;    // static only, 1 x (N_d - 1); 0 otherwise
    int input_switch_ports_alt = 0;  // the (N_d-1) x (max b - 1) port convention
    int input_switch_stages = 0;   // ceil(log2(2 N_d - 2)) - 1
    std::vector<DelayLine> lines;
    FiberSpec fiber;
};

GeneratorLayout layout(const TreeShape& shape, double dt_s, DelayMode mode,
                       const FiberSpec& fiber = {});

struct NetworkSize {
    int modes = 0;
    int min_layers = 0;
    bool extrapolated = false;  // layer count beyond the verified branchings
};

// 2(max b + 1) modes; 2 layers for max b = 2, 3 for max b in {3,4}.
NetworkSize required_network_size(const TreeShape& shape);

}  // namespace treegen::protocol
