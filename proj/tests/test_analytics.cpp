#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "treegen/analytics.hpp"

using namespace treegen;
using analytics::BranchingConstraint;
using analytics::RepeaterScenario;
using protocol::DelayMode;
using protocol::TreeShape;

namespace {

TreeShape shape(std::initializer_list<int> b) { return TreeShape(std::vector<int>(b)); }

}  // namespace

TEST_CASE("effective loss recursion") {
    SUBCASE("boundary values are exact for random shapes") {
        std::mt19937_64 gen(404);
        for (int trial = 0; trial < 100; ++trial) {
            int d = 1 + static_cast<int>(gen() % 6);
            std::vector<int> b;
            for (int k = 0; k < d; ++k) b.push_back(1 + static_cast<int>(gen() % 4));
            TreeShape t(b);
            CHECK(analytics::effective_loss(t, 0.0).eps_eff == 0.0);
            CHECK(analytics::effective_loss(t, 1.0).eps_eff == 1.0);
        }
    }
    SUBCASE("depth-1 and depth-2 symbolic expansion to 1e-12") {
        for (double e : {0.03, 0.1, 0.26, 0.5, 0.77}) {
            for (int b0 : {1, 2, 3, 4}) {
                CHECK(std::abs(analytics::effective_loss(shape({b0}), e).eps_eff -
                               oracles::effective_loss_depth1(b0, e)) < 1e-12);
                for (int b1 : {1, 2, 3, 4})
                    CHECK(std::abs(
                              analytics::effective_loss(TreeShape({std::vector<int>{b0, b1}}), e).eps_eff -
                              oracles::effective_loss_depth2(b0, b1, e)) < 1e-12);
            }
        }
    }
    SUBCASE("[2,2] at 10% per-photon loss") {
        // Hand expansion: R1 = 1-e^2, P = [(1-e+eR1)^2-(eR1)^2](1-e)^2.
        double e = 0.1;
        double r1 = 1.0 - e * e;
        double p = (std::pow(1 - e + e * r1, 2) - std::pow(e * r1, 2)) * std::pow(1 - e, 2);
        auto out = analytics::effective_loss(shape({2, 2}), e);
        CHECK(out.p_indirect == doctest::Approx(p).epsilon(1e-12));
        CHECK(out.eps_eff == doctest::Approx(e * (1.0 - p)).epsilon(1e-12));
    }
    SUBCASE("monotone non-decreasing in eps0") {
        for (auto b : {shape({2}), shape({2, 2}), shape({4, 4}), shape({2, 3, 4}), shape({2, 2, 2, 2})}) {
            double prev = -1.0;
            for (int i = 0; i <= 50; ++i) {
                double e = i / 50.0;
                double eff = analytics::effective_loss(b, e).eps_eff;
                CHECK(eff >= prev - 1e-12);
                CHECK(eff >= 0.0);
                CHECK(eff <= 1.0);
                prev = eff;
            }
        }
    }
    SUBCASE("loss tolerance exists for [4,4] at small eps0") {
        for (double e : {0.01, 0.05, 0.1}) {
            double eff = analytics::effective_loss(shape({4, 4}), e).eps_eff;
            CHECK(eff < e);
        }
    }
    SUBCASE("out-of-range eps0 throws") {
        CHECK_THROWS(analytics::effective_loss(shape({2}), -0.1));
        CHECK_THROWS(analytics::effective_loss(shape({2}), 1.1));
    }
}

TEST_CASE("loss budgets") {
    const double dt = 10e-9;
    TreeShape b22 = shape({2, 2});
    auto sched = protocol::generate_schedule(b22, dt);
    auto lay = protocol::layout(b22, dt, DelayMode::Dynamic);
    SUBCASE("lossless hardware gives zero everywhere") {
        auto budgets = analytics::loss_budget(sched, lay, mesh::HardwareModel::lossless(),
                                              {6, 2});
        for (const auto& b : budgets) {
            CHECK(b.total_db() == doctest::Approx(0.0));
            CHECK(b.survival() == doctest::Approx(1.0));
        }
    }
    SUBCASE("itemization follows the path records and sums to the total") {
        mesh::HardwareModel hw = mesh::HardwareModel::single();
        auto budgets = analytics::loss_budget(sched, lay, hw, {6, 2});
        REQUIRE(budgets.size() == 7);
        for (const auto& b : budgets) {
            double resum = b.qpnn_db + b.switch_db + b.coupling_db + b.delay_fiber_db + b.channel_db;
            CHECK(b.total_db() == doctest::Approx(resum).epsilon(1e-15));
        }
        // Root: one pass, one switch crossing, one coupling, no delay fiber.
        const auto& root = budgets[0];
        CHECK(root.photon == protocol::PhotonLabel{0, 0});
        CHECK(root.qpnn_passes == 1);
        CHECK(root.qpnn_db == doctest::Approx((12 + 1) * 0.2130));  // + prep unit
        CHECK(root.switch_db == doctest::Approx(2 * 0.107));
        CHECK(root.coupling_db == doctest::Approx(0.120));
        CHECK(root.delay_fiber_db == doctest::Approx(0.0));
        // Bottom photon (2,0): two passes, three couplings, 8.2 m of fiber.
        const auto& bottom = *std::find_if(budgets.begin(), budgets.end(), [](const auto& b) {
            return b.photon == protocol::PhotonLabel{2, 0};
        });
        CHECK(bottom.qpnn_passes == 2);
        CHECK(bottom.switch_crossings == 2);
        CHECK(bottom.couplings == 3);
        CHECK(bottom.delay_fiber_m == doctest::Approx(8.2).epsilon(0.006));
        CHECK(bottom.coupling_db == doctest::Approx(3 * 0.120));
    }
}

TEST_CASE("generation rate") {
    const double dt = 10e-9;
    TreeShape b22 = shape({2, 2});
    auto sched = protocol::generate_schedule(b22, dt);
    auto lay = protocol::layout(b22, dt, DelayMode::Dynamic);
    SUBCASE("lossless [2,2] at 10 ns runs at 12.5 MHz") {
        auto budgets = analytics::loss_budget(sched, lay, mesh::HardwareModel::lossless(), {6, 2});
        CHECK(analytics::generation_rate(sched, budgets) == doctest::Approx(12.5e6));
    }
    SUBCASE("single preset [2,2] lands near 1 kHz") {
        auto budgets = analytics::loss_budget(sched, lay, mesh::HardwareModel::single(), {6, 2});
        double rate = analytics::generation_rate(sched, budgets);
        CHECK(rate > 1000.0 / 3.0);
        CHECK(rate < 1000.0 * 3.0);
    }
    SUBCASE("multi preset [2,2,2] lands near 73 kHz") {
        TreeShape b222 = shape({2, 2, 2});
        auto s = protocol::generate_schedule(b222, dt);
        auto l = protocol::layout(b222, dt, DelayMode::Dynamic);
        auto budgets = analytics::loss_budget(s, l, mesh::HardwareModel::multi(), {6, 2});
        double rate = analytics::generation_rate(s, budgets);
        CHECK(rate > 73e3 / 3.0);
        CHECK(rate < 73e3 * 3.0);
    }
    SUBCASE("generation never beats repetition; equal only when lossless") {
        auto budgets = analytics::loss_budget(sched, lay, mesh::HardwareModel::multi(), {6, 2});
        CHECK(analytics::generation_rate(sched, budgets) <= 12.5e6);
    }
}

TEST_CASE("communication rate") {
    SUBCASE("no nodes means the repetition rate") {
        CHECK(analytics::communication_rate(shape({2, 2}), 0.2, 0, 80e-9) ==
              doctest::Approx(12.5e6));
    }
    SUBCASE("formula check at eps_eff = 0.5") {
        // Find eps0 with eps_eff = 0.5 by bisection, then check the power law.
        TreeShape b = shape({2, 2});
        double lo = 0.0, hi = 1.0;
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            (analytics::effective_loss(b, mid).eps_eff < 0.5 ? lo : hi) = mid;
        }
        double rate = analytics::communication_rate(b, 0.5 * (lo + hi), 2, 80e-9);
        CHECK(rate == doctest::Approx(3.125e6).epsilon(1e-6));
    }
    SUBCASE("direct-photon benchmark") {
        RepeaterScenario sc;
        sc.total_km = 10.0;
        double hop = std::pow(10.0, -0.17 * 5.0 / 10.0);
        CHECK(analytics::direct_photon_rate(sc, mesh::HardwareModel::single()) ==
              doctest::Approx(hop * hop / 10e-9));
    }
    SUBCASE("fractional node counts are rejected") {
        RepeaterScenario sc;
        sc.total_km = 12.0;
        CHECK_THROWS(sc.nodes());
    }
}

TEST_CASE("emitter models") {
    SUBCASE("sequential protocol span for [2,2] is 17 periods") {
        CHECK(analytics::emitter_total_time(shape({2, 2}), 1.0) == doctest::Approx(17.0));
    }
    SUBCASE("quantum-dot source period near 11.94 ns") {
        CHECK(analytics::EmitterModel::qd().dt_s() == doctest::Approx(11.94e-9).epsilon(0.001));
    }
    SUBCASE("repetition decreases as any branch grows") {
        double base = 1.0 / analytics::emitter_total_time(shape({2, 2}), 1.0);
        CHECK(1.0 / analytics::emitter_total_time(shape({3, 2}), 1.0) < base);
        CHECK(1.0 / analytics::emitter_total_time(shape({2, 3}), 1.0) < base);
    }
    SUBCASE("presets carry the reference parameters") {
        CHECK(analytics::EmitterModel::qd().gamma_r == doctest::Approx(2 * M_PI * 80e9));
        CHECK(analytics::EmitterModel::qd().t_coh == doctest::Approx(4e-6));
        CHECK(analytics::EmitterModel::siv().gamma_r == doctest::Approx(2 * M_PI * 0.1e9));
        CHECK(analytics::EmitterModel::siv().t_coh == doctest::Approx(10e-3));
        CHECK(analytics::EmitterModel::atom().gamma_r == doctest::Approx(2 * M_PI * 10e9));
        CHECK(analytics::EmitterModel::atom().t_coh == doctest::Approx(1.0));
    }
}

TEST_CASE("comparison curves") {
    // 10% generator loss plus a 5 km hop.
    double fiber = 1.0 - std::pow(10.0, -0.17 * 5.0 / 10.0);
    CHECK(fiber == doctest::Approx(0.178).epsilon(0.002));
    double eps0 = 1.0 - 0.9 * std::pow(10.0, -0.085);
    auto rows = analytics::comparison_curves(eps0, 6, 4);
    REQUIRE(rows.size() == 6);
    double prev = 2.0;
    for (const auto& r : rows) {
        if (r.marker) {
            CHECK(r.eps_eff < prev);
            prev = r.eps_eff;
        }
        CHECK(r.qpnn_rep_hz == doctest::Approx(1.0 / protocol::total_time(r.shape, 10e-9)));
        CHECK(r.qd_rep_hz > r.siv_rep_hz);  // faster emitter, faster protocol
    }
    CHECK(rows[0].marker);
}

TEST_CASE("repeater optimization") {
    SUBCASE("single preset always picks the 3-photon tree") {
        RepeaterScenario sc;
        std::vector<double> lengths{10, 250, 1000, 3000};
        auto points = analytics::optimize_repeater(mesh::HardwareModel::single(), sc,
                                                   BranchingConstraint::Free, lengths);
        REQUIRE(points.size() == lengths.size());
        for (const auto& p : points) {
            CHECK(p.metrics.n == 3);
            CHECK(p.shape.branching() == std::vector<int>{2});
        }
    }
    SUBCASE("doubling losses never raises the optimal rate") {
        RepeaterScenario sc;
        std::vector<double> lengths{100, 500};
        mesh::HardwareModel hw = mesh::HardwareModel::multi();
        mesh::HardwareModel worse = hw;
        worse.mzi_loss_mean_db *= 2.0;
        worse.switch_loss_db_per_stage *= 2.0;
        worse.coupling_loss_db *= 2.0;
        auto a = analytics::optimize_repeater(hw, sc, BranchingConstraint::Free, lengths);
        auto b = analytics::optimize_repeater(worse, sc, BranchingConstraint::Free, lengths);
        for (std::size_t i = 0; i < lengths.size(); ++i)
            CHECK(b[i].metrics.communication_hz <= a[i].metrics.communication_hz + 1e-12);
    }
    SUBCASE("deterministic across repeated runs") {
        RepeaterScenario sc;
        std::vector<double> lengths{500};
        auto a = analytics::optimize_repeater(mesh::HardwareModel::future(), sc,
                                              BranchingConstraint::Free, lengths);
        auto b = analytics::optimize_repeater(mesh::HardwareModel::future(), sc,
                                              BranchingConstraint::Free, lengths);
        CHECK(a[0].shape.branching() == b[0].shape.branching());
        CHECK(a[0].metrics.communication_hz == b[0].metrics.communication_hz);
    }
}

TEST_CASE("beta statistics") {
    SUBCASE("method of moments recovers synthetic parameters within 20%") {
        std::mt19937_64 gen(777);
        const double alpha = 200.0, beta = 2.0;
        std::gamma_distribution<double> ga(alpha, 1.0), gb(beta, 1.0);
        std::vector<double> fid, costs;
        for (int i = 0; i < 1000; ++i) {
            double x = ga(gen), y = gb(gen);
            fid.push_back(x / (x + y));
            costs.push_back(0.0);  // every trial survives
        }
        auto stats = analytics::fit_fidelity_stats(costs, fid, 0.0, "multi");
        CHECK(stats.survivors == 1000);
        CHECK(std::abs(stats.alpha - alpha) / alpha < 0.2);
        CHECK(std::abs(stats.beta - beta) / beta < 0.2);
        CHECK(stats.ci_low < stats.mean);
        CHECK(stats.mean < stats.ci_high);
    }
    SUBCASE("identical fidelities give a degenerate interval") {
        std::vector<double> fid(8, 0.9991), costs(8, 0.01);
        auto stats = analytics::fit_fidelity_stats(costs, fid, 0.05, "multi");
        CHECK(stats.degenerate);
        CHECK(stats.mean == doctest::Approx(0.9991));
        CHECK(stats.ci_low == doctest::Approx(0.9991));
        CHECK(stats.ci_high == doctest::Approx(0.9991));
    }
    SUBCASE("tree fidelity is the elementwise power") {
        std::vector<double> fid{0.999, 0.9992, 0.9988, 0.9991, 0.99895, 0.9993};
        std::vector<double> costs(fid.size(), 0.0);
        auto stats = analytics::fit_fidelity_stats(costs, fid, 0.0, "future");
        auto tree = stats.tree(7);
        CHECK(tree.mean == doctest::Approx(std::pow(stats.mean, 7)));
        CHECK(tree.ci_low == doctest::Approx(std::pow(stats.ci_low, 7)));
        CHECK(tree.ci_high == doctest::Approx(std::pow(stats.ci_high, 7)));
        auto same = stats.tree(1);
        CHECK(same.mean == doctest::Approx(stats.mean));
    }
    SUBCASE("thresholding drops failed trials and needs five survivors") {
        std::vector<double> costs{0.13, 0.131, 0.132, 0.5, 0.6, 0.13, 0.133, 0.129};
        std::vector<double> fid{0.9999, 0.9998, 0.9997, 0.5, 0.4, 0.99985, 0.99975, 0.99995};
        double limit = 0.129;
        auto stats = analytics::fit_fidelity_stats(costs, fid, limit, "multi");
        CHECK(stats.survivors == 6);
        std::vector<double> too_few_costs{0.13, 0.5, 0.6, 0.7, 0.8, 0.9};
        std::vector<double> too_few_fid(6, 0.99);
        CHECK_THROWS(analytics::fit_fidelity_stats(too_few_costs, too_few_fid, limit, "multi"));
    }
}

TEST_CASE("tree metrics for a single generator") {
    auto m = analytics::tree_metrics(shape({2, 2}), mesh::HardwareModel::multi(), 10e-9);
    CHECK(m.n == 7);
    CHECK(m.dt_T == doctest::Approx(80e-9));
    CHECK(m.repetition_hz == doctest::Approx(12.5e6));
    CHECK(m.eps0 > 0.0);
    CHECK(m.eps0 < 1.0);
    CHECK(m.generation_hz < m.repetition_hz);
}
