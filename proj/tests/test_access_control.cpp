#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfra/access_control.hpp"

using namespace cfra;

namespace {

ActivityMatrix make_activity(std::vector<std::vector<double>> rows) {
    ActivityMatrix m{Table<double>(rows.size(), rows.front().size())};
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t l = 0; l < rows[t].size(); ++l) m.a(t, l) = rows[t][l];
    return m;
}

struct Draw {
    Topology topo;
    PilotAssignment pilots;
    ChannelRealization ch;
    std::vector<cplx> noise;
    CorrelatedUplink up;
    ActivityMatrix act;
};

Draw draw(const ScenarioConfig& c, std::vector<Point> ues, std::vector<int> pilot_of, Rng& rng) {
    Draw d;
    d.topo = build_topology(c, std::move(ues));
    d.pilots = assign_pilots(std::move(pilot_of), c.num_pilots);
    std::vector<std::size_t> idx(d.topo.num_ues());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    d.ch = draw_channels(d.topo, idx, rng);
    d.noise = draw_uplink_noise(d.topo.num_aps(), static_cast<std::size_t>(c.num_pilots),
                                static_cast<std::size_t>(c.antennas_per_ap), c.noise_power_mw(), rng);
    d.up = correlate_uplink(d.ch, d.pilots, link_budget(c), d.noise);
    d.act = pilot_activity(d.up);
    return d;
}

}  // namespace

TEST(ServingSets, ThresholdSortAndTruncate) {
    const double s2 = 1.0;
    const auto act = make_activity({{0.5, 3.0, 2.0, 1.0, 4.0}, {0.9, 0.8, 1.0, 0.1, 0.2}, {2.0, 2.0, 0.0, 5.0, 2.0}});
    const auto s = build_serving_sets(act, 2, s2);
    EXPECT_EQ(s.p_t[0], (std::vector<int>{4, 1}));
    // Activity equal to sigma^2 is not above it.
    EXPECT_TRUE(s.p_t[1].empty());
    // Ties keep the lower AP first.
    EXPECT_EQ(s.p_t[2], (std::vector<int>{3, 0}));
    EXPECT_EQ(s.t_l[0], (std::vector<int>{2}));
    EXPECT_EQ(s.t_l[4], (std::vector<int>{0}));
    EXPECT_TRUE(s.t_l[2].empty());
    EXPECT_EQ(s.operative_aps, (std::vector<int>{0, 1, 3, 4}));
    EXPECT_FALSE(s.pilot_active(1));
    EXPECT_TRUE(s.serves(0, 1));
    EXPECT_FALSE(s.serves(0, 2));
}

TEST(ServingSets, FullCapKeepsEveryActiveAp) {
    const auto act = make_activity({{2.0, 0.5, 3.0}});
    EXPECT_EQ(build_serving_sets(act, 3, 1.0).p_t[0], (std::vector<int>{2, 0}));
    EXPECT_THROW(build_serving_sets(act, 4, 1.0), std::invalid_argument);
    EXPECT_THROW(build_serving_sets(act, 0, 1.0), std::invalid_argument);
}

TEST(ServingSets, DualViewsAgree) {
    ScenarioConfig c;
    Rng rng = make_stream(1, 0, Stream::channel);
    for (int trial = 0; trial < 50; ++trial) {
        auto pos = uniform_positions(6, c.square_length_m, rng);
        std::vector<int> p(6);
        for (auto& x : p) x = std::uniform_int_distribution<int>(0, 4)(rng);
        const auto d = draw(c, pos, p, rng);
        const int l_max = 1 + trial % 64;
        const auto s = build_serving_sets(d.act, l_max, c.noise_power_mw());
        auto back = pilots_from_aps(s.t_l, s.p_t.size());
        for (std::size_t t = 0; t < s.p_t.size(); ++t) {
            auto sorted = s.p_t[t];
            std::sort(sorted.begin(), sorted.end());
            EXPECT_EQ(back[t], sorted);
            EXPECT_LE(s.p_t[t].size(), static_cast<std::size_t>(l_max));
        }
        const auto again = serving_sets_from_pilots(back, s.t_l.size());
        EXPECT_EQ(again.t_l, s.t_l);
        EXPECT_EQ(again.operative_aps, s.operative_aps);
    }
}

TEST(CpuEstimate, ClipsNoiseFloor) {
    const auto act = make_activity({{0.5, 3.0, 2.0}, {0.2, 0.3, 0.9}});
    const auto a = cpu_alpha_hat(act, 1.0);
    EXPECT_DOUBLE_EQ(a[0], 3.0);
    EXPECT_DOUBLE_EQ(a[1], 0.0);
}

TEST(CpuEstimate, BiasedUpwards) {
    ScenarioConfig c;
    const auto link = link_budget(c);
    Rng rng = make_stream(2, 0, Stream::channel);
    double est = 0.0, truth = 0.0;
    for (int r = 0; r < 400; ++r) {
        const auto d = draw(c, {{120.0, 80.0}, {260.0, 300.0}}, {0, 0}, rng);
        est += cpu_alpha_hat(d.act, link.noise_mw)[0];
        const std::vector<std::size_t> g{0, 1};
        for (std::size_t l = 0; l < 64; ++l) truth += true_alpha_lt(d.topo, g, l, link);
    }
    EXPECT_GT(est, truth);
    EXPECT_LT(est / truth, 1.05);
}

TEST(Downlink, UnservedUeSeesOnlyNoise) {
    ScenarioConfig c;
    const auto link = link_budget(c);
    Rng rng = make_stream(3, 0, Stream::channel);
    const auto d = draw(c, {{100.0, 100.0}, {300.0, 300.0}}, {0, 1}, rng);
    auto p_t = build_serving_sets(d.act, 64, link.noise_mw).p_t;
    p_t[1].clear();
    const auto serving = serving_sets_from_pilots(p_t, 64);
    Rng eta = make_stream(3, 1, Stream::noise);
    Rng copy = eta;
    const auto obs = downlink_observation(d.up, serving, d.topo, d.ch, d.pilots, link, eta, Precoding::standard);
    EXPECT_TRUE(obs.served[0]);
    EXPECT_FALSE(obs.served[1]);
    const auto eta0 = complex_normal(copy, link.noise_mw);
    const auto eta1 = complex_normal(copy, link.noise_mw);
    (void)eta0;
    EXPECT_EQ(obs.z[1], eta1);
    EXPECT_EQ(obs.z_tilde[1], 0.0);
}

TEST(Downlink, TermsAddUpToObservation) {
    ScenarioConfig c;
    const auto link = link_budget(c);
    Rng rng = make_stream(4, 0, Stream::channel);
    for (auto kind : {Precoding::standard, Precoding::normalized}) {
        const auto d = draw(c, {{100.0, 100.0}, {130.0, 90.0}, {300.0, 300.0}}, {2, 2, 4}, rng);
        const auto serving = build_serving_sets(d.act, 10, link.noise_mw);
        const auto cpu = cpu_alpha_hat(d.act, link.noise_mw);
        Rng eta = make_stream(4, 1, Stream::noise);
        Rng copy = eta;
        const auto obs = kind == Precoding::standard
                             ? downlink_observation(d.up, serving, d.topo, d.ch, d.pilots, link, eta, kind)
                             : downlink_observation(d.up, serving, d.topo, d.ch, d.pilots, link, eta, kind,
                                                    std::span<const double>(cpu));
        for (std::size_t k = 0; k < 3; ++k) {
            const auto terms = downlink_terms(k, d.up, serving, d.topo, d.ch, d.pilots, link, d.noise, kind, cpu);
            const auto sum = terms.effective + terms.interference + terms.noise + complex_normal(copy, link.noise_mw);
            EXPECT_NEAR(std::abs(sum - obs.z[k]) / std::abs(obs.z[k]), 0.0, 1e-12);
            EXPECT_GT(terms.effective.real(), 0.0);
            EXPECT_EQ(terms.effective.imag(), 0.0);
        }
        // The UE alone on its pilot sees no interference.
        const auto alone = downlink_terms(2, d.up, serving, d.topo, d.ch, d.pilots, link, d.noise, kind, cpu);
        EXPECT_EQ(alone.interference, cplx{});
    }
}

TEST(Downlink, NormalizedPowerFormula) {
    ScenarioConfig c;
    const auto link = link_budget(c);
    Rng rng = make_stream(5, 0, Stream::channel);
    const auto d = draw(c, {{100.0, 100.0}, {300.0, 120.0}}, {0, 0}, rng);
    const auto serving = build_serving_sets(d.act, 64, link.noise_mw);
    const auto cpu = cpu_alpha_hat(d.act, link.noise_mw);
    Rng eta = make_stream(5, 1, Stream::noise);
    const auto obs = downlink_observation(d.up, serving, d.topo, d.ch, d.pilots, link, eta, Precoding::normalized,
                                          std::span<const double>(cpu));
    ASSERT_FALSE(serving.p_t[0].empty());
    double sum = 0.0;
    for (std::size_t l = 0; l < 64; ++l) {
        if (!serving.serves(0, static_cast<int>(l))) {
            EXPECT_EQ(obs.effective_dl_power(l, 0), 0.0);
            continue;
        }
        const double expected = c.dl_power_per_ap_mw * d.act.a(0, l) / cpu[0];
        EXPECT_NEAR(obs.effective_dl_power(l, 0) / expected, 1.0, 1e-12);
        sum += d.act.a(0, l) / cpu[0];
    }
    // With every active AP serving, the normalized shares add to about one.
    EXPECT_GT(sum, 1.0);
    EXPECT_LT(sum, 2.0);
}

TEST(Downlink, CpuEstimateRequiredExactlyForNormalized) {
    ScenarioConfig c;
    const auto link = link_budget(c);
    Rng rng = make_stream(6, 0, Stream::channel);
    const auto d = draw(c, {{100.0, 100.0}}, {0}, rng);
    const auto serving = build_serving_sets(d.act, 64, link.noise_mw);
    const auto cpu = cpu_alpha_hat(d.act, link.noise_mw);
    EXPECT_THROW(downlink_observation(d.up, serving, d.topo, d.ch, d.pilots, link, rng, Precoding::normalized),
                 std::invalid_argument);
    EXPECT_THROW(downlink_observation(d.up, serving, d.topo, d.ch, d.pilots, link, rng, Precoding::standard,
                                      std::span<const double>(cpu)),
                 std::invalid_argument);
}

TEST(Downlink, HardeningImprovesWithAntennas) {
    ScenarioConfig c;
    std::vector<double> errors;
    for (int n : {8, 32, 128}) {
        c.antennas_per_ap = n;
        const auto link = link_budget(c);
        Rng rng = make_stream(7, static_cast<std::uint64_t>(n), Stream::channel);
        std::vector<double> rel;
        for (int r = 0; r < 300; ++r) {
            const auto d = draw(c, {{150.0, 170.0}, {190.0, 230.0}}, {0, 0}, rng);
            const auto serving = build_serving_sets(d.act, 64, link.noise_mw);
            Rng eta = make_stream(7, 1000 + static_cast<std::uint64_t>(r), Stream::noise);
            const auto obs = downlink_observation(d.up, serving, d.topo, d.ch, d.pilots, link, eta, Precoding::standard);
            for (std::size_t k = 0; k < 2; ++k)
                rel.push_back(std::abs(obs.z[k].real() / std::sqrt(double(n)) - obs.z_tilde[k]) / obs.z_tilde[k]);
        }
        errors.push_back(std::accumulate(rel.begin(), rel.end(), 0.0) / rel.size());
    }
    EXPECT_GT(errors[0], errors[1]);
    EXPECT_GT(errors[1], errors[2]);
    EXPECT_LT(errors[2], 0.05);
}
