#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "cfra/channel.hpp"

using namespace cfra;

namespace {

Topology two_ue_topology() {
    ScenarioConfig c;
    return build_topology(c, {{100.0, 100.0}, {300.0, 250.0}});
}

}  // namespace

TEST(Pilots, AssignmentBuildsCollidingSets) {
    const auto p = assign_pilots({2, 0, 2, 4}, 5);
    EXPECT_EQ(p.num_pilots(), 5);
    EXPECT_EQ(p.colliding[0], (std::vector<int>{1}));
    EXPECT_TRUE(p.colliding[1].empty());
    EXPECT_EQ(p.colliding[2], (std::vector<int>{0, 2}));
    EXPECT_EQ(p.colliding[4], (std::vector<int>{3}));
    EXPECT_THROW(assign_pilots({5}, 5), std::out_of_range);
}

TEST(Pilots, UniformSelection) {
    Rng rng = make_stream(1, 0, Stream::pilots);
    const auto p = select_pilots(50000, 5, rng);
    for (const auto& s : p.colliding) EXPECT_NEAR(s.size() / 50000.0, 0.2, 0.01);
}

TEST(Rng, ComplexNormalVariance) {
    Rng rng = make_stream(2, 0, Stream::noise);
    double re = 0.0, im = 0.0, power = 0.0, cross = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const auto v = complex_normal(rng, 3.0);
        re += v.real() * v.real();
        im += v.imag() * v.imag();
        cross += v.real() * v.imag();
        power += std::norm(v);
    }
    EXPECT_NEAR(power / n, 3.0, 0.03);
    EXPECT_NEAR(re / n, 1.5, 0.02);
    EXPECT_NEAR(im / n, 1.5, 0.02);
    EXPECT_NEAR(cross / n, 0.0, 0.02);
}

TEST(Rng, StreamsAreIndependentOfEachOther) {
    Rng a = make_stream(5, 1, Stream::channel);
    Rng b = make_stream(5, 1, Stream::noise);
    Rng c = make_stream(5, 2, Stream::channel);
    Rng a2 = make_stream(5, 1, Stream::channel);
    const auto x = a();
    EXPECT_NE(x, b());
    EXPECT_NE(x, c());
    EXPECT_EQ(x, a2());
}

TEST(Channel, GainMatchesBeta) {
    const auto topo = two_ue_topology();
    Rng rng = make_stream(3, 0, Stream::channel);
    double e0 = 0.0, e1 = 0.0;
    const int reps = 4000;
    for (int r = 0; r < reps; ++r) {
        const auto ch = draw_channels(topo, {0, 1}, rng);
        for (const auto& v : ch.at(0, 0)) e0 += std::norm(v);
        for (const auto& v : ch.at(1, 63)) e1 += std::norm(v);
    }
    EXPECT_NEAR(e0 / (reps * 8.0) / topo.beta(0, 0), 1.0, 0.03);
    EXPECT_NEAR(e1 / (reps * 8.0) / topo.beta(1, 63), 1.0, 0.03);
}

TEST(Uplink, NoiseOnlyActivityIsSigmaSquared) {
    const auto topo = two_ue_topology();
    ScenarioConfig c;
    const auto link = link_budget(c);
    Rng ch_rng = make_stream(4, 0, Stream::channel);
    Rng n_rng = make_stream(4, 0, Stream::noise);
    const auto pilots = assign_pilots({0, 0}, 5);
    double acc = 0.0;
    int count = 0;
    for (int r = 0; r < 200; ++r) {
        const auto ch = draw_channels(topo, {0, 1}, ch_rng);
        const auto act = pilot_activity(correlate_uplink(ch, pilots, link, n_rng));
        for (std::size_t t = 1; t < 5; ++t)
            for (double a : act.a.row(t)) {
                acc += a;
                ++count;
            }
    }
    EXPECT_NEAR(acc / count / link.noise_mw, 1.0, 0.01);
}

TEST(Uplink, ActivityMeanIsAlphaPlusNoise) {
    const auto topo = two_ue_topology();
    ScenarioConfig c;
    const auto link = link_budget(c);
    Rng ch_rng = make_stream(6, 0, Stream::channel);
    Rng n_rng = make_stream(6, 0, Stream::noise);
    const auto pilots = assign_pilots({1, 1}, 5);
    const std::vector<std::size_t> g{0, 1};
    for (std::size_t l : {0u, 27u, 63u}) {
        double acc = 0.0;
        const int reps = 3000;
        Rng cr = ch_rng, nr = n_rng;
        for (int r = 0; r < reps; ++r) {
            const auto ch = draw_channels(topo, g, cr);
            acc += pilot_activity(correlate_uplink(ch, pilots, link, nr)).a(1, l);
        }
        const double expected = true_alpha_lt(topo, g, l, link) + link.noise_mw;
        EXPECT_NEAR(acc / reps / expected, 1.0, 0.04) << "ap " << l;
    }
}

TEST(Uplink, LinearInChannelsAndNoise) {
    const auto topo = two_ue_topology();
    ScenarioConfig c;
    const auto link = link_budget(c);
    Rng rng = make_stream(7, 0, Stream::channel);
    const auto pilots = assign_pilots({3, 3}, 5);
    const auto ch = draw_channels(topo, {0, 1}, rng);
    Rng nrng = make_stream(7, 0, Stream::noise);
    const auto noise = draw_uplink_noise(64, 5, 8, link.noise_mw, nrng);
    const std::vector<cplx> zero(noise.size());

    const auto full = correlate_uplink(ch, pilots, link, noise);
    const auto signal = correlate_uplink(ch, pilots, link, zero);
    for (std::size_t i = 0; i < full.y.size(); ++i) EXPECT_NEAR(std::abs(full.y[i] - signal.y[i] - noise[i]), 0.0, 1e-15);

    // Dropping one UE removes exactly its contribution.
    auto only0 = ch;
    for (auto& v : only0.at(1, 5)) v = 0.0;
    const auto partial = correlate_uplink(only0, pilots, link, zero);
    const auto s = signal.at(5, 3);
    const auto p = partial.at(5, 3);
    const auto h1 = ch.at(1, 5);
    const double amp = std::sqrt(link.ul_power_mw * link.num_pilots);
    for (std::size_t n = 0; n < 8; ++n) EXPECT_NEAR(std::abs(s[n] - p[n] - amp * h1[n]), 0.0, 1e-15);
    // Unused pilots carry noise only.
    for (std::size_t n = 0; n < 8; ++n) EXPECT_EQ(full.at(5, 0)[n], noise[(5 * 5 + 0) * 8 + n]);
}

TEST(Uplink, RejectsMismatchedNoise) {
    const auto topo = two_ue_topology();
    ScenarioConfig c;
    Rng rng = make_stream(8, 0, Stream::channel);
    const auto ch = draw_channels(topo, {0}, rng);
    const std::vector<cplx> noise(3);
    EXPECT_THROW(correlate_uplink(ch, assign_pilots({0}, 5), link_budget(c), noise), std::invalid_argument);
}

TEST(Uplink, DeterministicForSeed) {
    const auto topo = two_ue_topology();
    ScenarioConfig c;
    auto run = [&] {
        Rng a = make_stream(11, 3, Stream::channel);
        Rng b = make_stream(11, 3, Stream::noise);
        const auto ch = draw_channels(topo, {0, 1}, a);
        return correlate_uplink(ch, assign_pilots({0, 2}, 5), link_budget(c), b).y;
    };
    EXPECT_EQ(run(), run());
}

TEST(Alpha, SumsOverColliders) {
    const auto topo = two_ue_topology();
    ScenarioConfig c;
    const auto link = link_budget(c);
    const std::vector<std::size_t> both{0, 1};
    const std::vector<std::size_t> first{0};
    EXPECT_DOUBLE_EQ(true_alpha_lt(topo, first, 9, link), 500.0 * topo.beta(0, 9));
    EXPECT_DOUBLE_EQ(true_alpha_lt(topo, both, 9, link), 500.0 * (topo.beta(0, 9) + topo.beta(1, 9)));
}
