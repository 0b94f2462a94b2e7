#include "treegen/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace treegen::protocol {

TreeShape::TreeShape(std::vector<int> branching) : b_(std::move(branching)) {
    if (b_.empty()) throw std::invalid_argument("TreeShape: empty branching vector");
    for (int b : b_)
        if (b < 1) throw std::invalid_argument("TreeShape: branching entries must be >= 1");
}

int TreeShape::max_branching() const { return *std::max_element(b_.begin(), b_.end()); }

std::int64_t TreeShape::photons_in_row(int row) const {
    if (row < 0 || row > depth()) throw std::out_of_range("photons_in_row: row outside tree");
    std::int64_t p = 1;
    for (int k = 0; k < row; ++k) p *= b_[static_cast<std::size_t>(k)];
    return p;
}

std::int64_t TreeShape::photon_count() const {
    std::int64_t total = 1;
    std::int64_t prod = 1;
    for (int k = 0; k < depth(); ++k) {
        prod *= b_[static_cast<std::size_t>(k)];
        total += prod;
    }
    return total;
}

std::int64_t TreeShape::product_all() const { return product_from(0); }

std::int64_t TreeShape::product_from(int from) const {
    std::int64_t p = 1;
    for (int k = std::max(from, 0); k < depth(); ++k) p *= b_[static_cast<std::size_t>(k)];
    return p;
}

std::string TreeShape::to_string() const {
    std::ostringstream os;
    for (int k = 0; k < depth(); ++k) {
        if (k) os << ",";
        os << b_[static_cast<std::size_t>(k)];
    }
    return os.str();
}

TreeShape TreeShape::parse(const std::string& text) {
    std::vector<int> b;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) b.push_back(std::stoi(item));
    return TreeShape(b);
}

std::int64_t photon_count(const TreeShape& shape) { return shape.photon_count(); }

std::int64_t total_time_steps(const TreeShape& shape) {
    return shape.product_all() * shape.depth();
}

double total_time(const TreeShape& shape, double dt_s) {
    return static_cast<double>(total_time_steps(shape)) * dt_s;
}

std::int64_t delay_steps(const TreeShape& shape, int line, int row) {
    if (row < 1 || row > shape.depth()) throw std::out_of_range("delay_steps: row outside 1..d");
    int lines = shape.branch(row - 1);
    if (line < 1 || line > lines) throw std::out_of_range("delay_steps: line outside 1..b_{j-1}");
    return shape.product_all() - static_cast<std::int64_t>(line - 1) * shape.product_from(row);
}

double delay_time(const TreeShape& shape, int line, int row, double dt_s) {
    return static_cast<double>(delay_steps(shape, line, row)) * dt_s;
}

double delay_length_m(double delay_s, const FiberSpec& fiber) {
    return delay_s * kSpeedOfLight / fiber.group_index;
}

double delay_loss_db(double delay_s, const FiberSpec& fiber) {
    return delay_length_m(delay_s, fiber) / 1000.0 * fiber.loss_db_per_km;
}

std::string PhotonLabel::to_string() const {
    return "(" + std::to_string(row) + "," + std::to_string(index) + ")";
}

const PathRecord& Schedule::path(const PhotonLabel& label) const {
    for (const auto& p : paths)
        if (p.photon == label) return p;
    throw std::out_of_range("Schedule::path: unknown photon " + label.to_string());
}

namespace {

struct Builder {
    const TreeShape& shape;
    double dt_s;
    DelayMode mode;
    FiberSpec fiber;
    std::vector<Event> events;
    std::map<PhotonLabel, PathRecord> paths;
    std::vector<Edge> edges;

    // Physical line id for logical line i (1-based) during the row-j stage.
    // Dynamic lines are shared across stages; static ones are per-stage.
    int line_id(int line, int row) const {
        if (mode == DelayMode::Dynamic) return line;
        int offset = 0;
        for (int j = shape.depth(); j > row; --j) offset += shape.branch(j - 1);
        return offset + line;
    }

    PathRecord& record(const PhotonLabel& label) {
        auto it = paths.find(label);
        if (it == paths.end()) {
            PathRecord r;
            r.photon = label;
            it = paths.emplace(label, std::move(r)).first;
        }
        return it->second;
    }

    void emit(std::int64_t t, const PhotonLabel& photon, int source) {
        events.push_back({t, EventKind::Emit, {photon}, source, 0, 0, 0, -1});
        PathRecord& r = record(photon);
        r.emit_t = t;
        r.source = source;
    }

    void qpnn_op(std::int64_t t, const std::vector<PhotonLabel>& photons) {
        Event e;
        e.t = t;
        e.kind = EventKind::QpnnOp;
        e.photons = photons;
        e.op_arity = static_cast<int>(photons.size());
        events.push_back(e);
        for (const auto& p : photons) {
            PathRecord& r = record(p);
            r.qpnn_passes += 1;
            r.switch_crossings += 1;  // the output switch follows every pass
        }
    }

    void route_to_line(std::int64_t t, const PhotonLabel& photon, int line, int row,
                       std::int64_t steps) {
        int id = line_id(line, row);
        events.push_back({t, EventKind::Route, {photon}, 0, 0, id, 0, -1});
        events.push_back({t, EventKind::DelayOccupy, {photon}, 0, 0, id, steps, -1});
        PathRecord& r = record(photon);
        DelayTraversal d;
        d.line = id;
        d.enter_t = t;
        d.steps = steps;
        d.meters = delay_length_m(static_cast<double>(steps) * dt_s, fiber);
        r.delays.push_back(d);
        r.delay_fiber_m += d.meters;
        r.couplings += 2;  // chip->fiber and fiber->chip
    }

    void route_to_output(std::int64_t t, const PhotonLabel& photon) {
        events.push_back({t, EventKind::Route, {photon}, 0, 0, 0, 0, -1});
    }

    void switch_config(std::int64_t t, int row) {
        events.push_back({t, EventKind::SwitchConfig, {}, 0, 0, 0, 0, row});
    }

    void finish(Schedule& out, std::int64_t span) {
        // Final output coupling for every photon.
        for (auto& [label, r] : paths) r.couplings += 1;
        // Explicit no-op steps keep the span arithmetic visible.
        std::set<std::int64_t> used;
        for (const auto& e : events) used.insert(e.t);
        for (std::int64_t t = 0; t <= span; ++t)
            if (!used.count(t)) events.push_back({t, EventKind::Idle, {}, 0, 0, 0, 0, -1});
        std::stable_sort(events.begin(), events.end(),
                         [](const Event& a, const Event& b) { return a.t < b.t; });
        out.span_steps = span;
        out.events = std::move(events);
        for (auto& [label, r] : paths) out.paths.push_back(r);
        std::sort(out.paths.begin(), out.paths.end(), [](const PathRecord& a, const PathRecord& b) {
            return a.photon < b.photon;
        });
        std::sort(edges.begin(), edges.end());
        out.edges = std::move(edges);
    }
};

// Single-source protocol: rows emitted bottom-up; row-j photon k is emitted
// at (d-j)*prod(b) + k*I_j with I_j = prod_{k=j}^{d-1} b_k, and meets its
// children exactly as their delays expire.
void build_single_source(Builder& b, Schedule& out) {
    const TreeShape& shape = b.shape;
    const int d = shape.depth();
    const std::int64_t prod = shape.product_all();

    for (int j = d; j >= 0; --j) {
        const std::int64_t interval = shape.product_from(j);  // I_j, 1 for the bottom row
        const std::int64_t first = static_cast<std::int64_t>(d - j) * prod;
        const std::int64_t count = shape.photons_in_row(j);
        if (b.mode == DelayMode::Static && j >= 1) b.switch_config(first, j);
        for (std::int64_t k = 0; k < count; ++k) {
            const std::int64_t t = first + k * interval;
            PhotonLabel photon{j, k};
            b.emit(t, photon, 0);
            if (j == d) {
                b.qpnn_op(t, {photon});
            } else {
                std::vector<PhotonLabel> party{photon};
                for (int c = 0; c < shape.branch(j); ++c) {
                    PhotonLabel child{j + 1, k * shape.branch(j) + c};
                    party.push_back(child);
                    b.edges.push_back({photon, child});
                }
                b.qpnn_op(t, party);
                for (std::size_t c = 1; c < party.size(); ++c) b.route_to_output(t, party[c]);
            }
            if (j >= 1) {
                int line = static_cast<int>(k % shape.branch(j - 1)) + 1;
                b.route_to_line(t, photon, line, j, delay_steps(shape, line, j));
            } else {
                b.route_to_output(t, photon);
            }
        }
    }
    b.finish(out, static_cast<std::int64_t>(d) * prod);
}

// Three-source variant for all-2 trees: whole bottom unit cells are emitted
// per step, then the remaining rows follow the single-source pattern of the
// contracted tree (bottom element dropped).
void build_three_source(Builder& b, Schedule& out) {
    const TreeShape& shape = b.shape;
    const int d = shape.depth();
    TreeShape contracted(std::vector<int>(shape.branching().begin(), shape.branching().end() - 1));
    const std::int64_t prod = contracted.product_all();
    const int dc = contracted.depth();

    for (int j = dc; j >= 0; --j) {
        const std::int64_t interval = contracted.product_from(j);
        const std::int64_t first = static_cast<std::int64_t>(dc - j) * prod;
        const std::int64_t count = contracted.photons_in_row(j);
        if (b.mode == DelayMode::Static && j >= 1) b.switch_config(first, j);
        for (std::int64_t k = 0; k < count; ++k) {
            const std::int64_t t = first + k * interval;
            PhotonLabel photon{j, k};
            std::vector<PhotonLabel> party{photon};
            if (j == dc) {
                // One complete bottom unit cell from the three sources.
                b.emit(t, photon, 0);
                for (int c = 0; c < shape.branch(d - 1); ++c) {
                    PhotonLabel child{d, k * shape.branch(d - 1) + c};
                    b.emit(t, child, 1 + c);
                    party.push_back(child);
                    b.edges.push_back({photon, child});
                }
            } else {
                b.emit(t, photon, 0);
                for (int c = 0; c < shape.branch(j); ++c) {
                    PhotonLabel child{j + 1, k * shape.branch(j) + c};
                    party.push_back(child);
                    b.edges.push_back({photon, child});
                }
            }
            b.qpnn_op(t, party);
            for (std::size_t c = 1; c < party.size(); ++c) b.route_to_output(t, party[c]);
            if (j >= 1) {
                int line = static_cast<int>(k % contracted.branch(j - 1)) + 1;
                b.route_to_line(t, photon, line, j, delay_steps(contracted, line, j));
            } else {
                b.route_to_output(t, photon);
            }
        }
    }
    b.finish(out, static_cast<std::int64_t>(dc) * prod);
}

}  // namespace

Schedule generate_schedule(const TreeShape& shape, double dt_s, int sources, DelayMode mode,
                           const FiberSpec& fiber) {
    if (dt_s <= 0.0) throw std::invalid_argument("generate_schedule: dt_s must be positive");
    if (sources != 1 && sources != 3)
        throw std::invalid_argument("generate_schedule: sources must be 1 or 3");
    Schedule out{shape, dt_s, sources, mode, 0, {}, {}, {}};
    Builder b{shape, dt_s, mode, fiber, {}, {}, {}};
    if (sources == 3) {
        if (shape.max_branching() != 2 || *std::min_element(shape.branching().begin(),
                                                            shape.branching().end()) != 2)
            throw std::invalid_argument("generate_schedule: three sources require an all-2 tree");
        if (shape.depth() < 2)
            throw std::invalid_argument("generate_schedule: three sources require depth >= 2");
        build_three_source(b, out);
    } else {
        build_single_source(b, out);
    }
    return out;
}

GeneratorLayout layout(const TreeShape& shape, double dt_s, DelayMode mode,
                       const FiberSpec& fiber) {
    GeneratorLayout gl;
    gl.dt_s = dt_s;
    gl.mode = mode;
    gl.fiber = fiber;
    const int d = shape.depth();
    if (mode == DelayMode::Static) {
        int nd = 0;
        for (int k = 0; k < d; ++k) nd += shape.branch(k);
        gl.delay_line_count = nd;
        int id = 0;
        for (int j = d; j >= 1; --j) {
            for (int i = 1; i <= shape.branch(j - 1); ++i) {
                DelayLine line;
                line.id = ++id;
                line.max_steps = delay_steps(shape, i, j);
                line.meters = delay_length_m(static_cast<double>(line.max_steps) * dt_s, fiber);
                line.loss_db = delay_loss_db(static_cast<double>(line.max_steps) * dt_s, fiber);
                line.retunable = false;
                gl.lines.push_back(line);
            }
        }
    } else {
        gl.delay_line_count = shape.max_branching();
        for (int i = 1; i <= gl.delay_line_count; ++i) {
            DelayLine line;
            line.id = i;
            line.max_steps = 0;
            for (int j = d; j >= 1; --j)
                if (i <= shape.branch(j - 1))
                    line.max_steps = std::max(line.max_steps, delay_steps(shape, i, j));
            line.meters = delay_length_m(static_cast<double>(line.max_steps) * dt_s, fiber);
            line.loss_db = delay_loss_db(static_cast<double>(line.max_steps) * dt_s, fiber);
            line.retunable = true;
            gl.lines.push_back(line);
        }
    }
    const int nd = gl.delay_line_count;
    gl.output_switch_ports = nd + 1;
    gl.output_switch_stages =
        static_cast<int>(std::ceil(std::log2(2.0 * nd + 2.0))) - 1;
    if (mode == DelayMode::Static) {
        gl.input_switch_ports = nd - 1;
        gl.input_switch_ports_alt = (nd - 1) * (shape.max_branching() - 1);
        gl.input_switch_stages =
            (nd >= 2) ? static_cast<int>(std::ceil(std::log2(2.0 * nd - 2.0))) - 1 : 0;
    }
    return gl;
}

NetworkSize required_network_size(const TreeShape& shape) {
    NetworkSize ns;
    int maxb = shape.max_branching();
    ns.modes = 2 * (maxb + 1);
    if (maxb <= 2) {
        ns.min_layers = 2;
        ns.extrapolated = (maxb < 2);
    } else if (maxb <= 4) {
        ns.min_layers = 3;
    } else {
        ns.min_layers = 3;
        ns.extrapolated = true;
    }
    return ns;
}

}  // namespace treegen::protocol
