#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cfra/campaign.hpp"
#include "cfra/metrics.hpp"

using namespace cfra;

namespace {

NearbySet set_of(std::vector<int> aps) {
    NearbySet s;
    s.ap_indices = std::move(aps);
    s.is_natural = true;
    return s;
}

AttemptStreams streams_for(std::uint64_t seed, std::uint64_t trial) {
    return {make_stream(seed, trial, Stream::pilots), make_stream(seed, trial, Stream::channel),
            make_stream(seed, trial, Stream::noise)};
}

AccessNetwork network(const ScenarioConfig& c, std::vector<Point> ues, bool cellular = false) {
    Topology topo = cellular ? build_cellular_topology(c, std::move(ues)) : build_topology(c, std::move(ues));
    return AccessNetwork(std::move(topo), c.iota, c.noise_power_mw());
}

}  // namespace

TEST(Separability, TextbookCases) {
    const std::vector<NearbySet> w{set_of({1, 2}), set_of({2, 3})};
    EXPECT_TRUE(spatial_separability_admit(w, std::vector<int>{2}).empty());
    EXPECT_EQ(spatial_separability_admit(w, std::vector<int>{1, 2}), (std::vector<std::size_t>{0}));
    EXPECT_EQ(spatial_separability_admit(w, std::vector<int>{3, 2, 1}), (std::vector<std::size_t>{0, 1}));
    EXPECT_TRUE(spatial_separability_admit(w, std::vector<int>{7}).empty());
    EXPECT_TRUE(spatial_separability_admit(std::vector<NearbySet>{}, std::vector<int>{1}).empty());
    const std::vector<NearbySet> one{set_of({4})};
    EXPECT_EQ(spatial_separability_admit(one, std::vector<int>{4, 5}), (std::vector<std::size_t>{0}));
    EXPECT_TRUE(spatial_separability_admit(one, std::vector<int>{5}).empty());
    // Three winners sharing everything.
    const std::vector<NearbySet> same{set_of({1, 2}), set_of({1, 2}), set_of({2, 1})};
    EXPECT_TRUE(spatial_separability_admit(same, std::vector<int>{1, 2}).empty());
}

TEST(Protocols, ParseAndCombinations) {
    EXPECT_EQ(parse_protocol("cf-sucre"), Protocol::cf_sucre);
    EXPECT_THROW(parse_protocol("sucre"), ConfigError);
    EXPECT_THROW(validate_combination(Protocol::cf_sucre, {EstimatorKind::cellular}), ConfigError);
    EXPECT_THROW(validate_combination(Protocol::ce_sucre, {EstimatorKind::est2}), ConfigError);
    EXPECT_NO_THROW(validate_combination(Protocol::ce_sucre, {EstimatorKind::cellular}));
    EXPECT_NO_THROW(validate_combination(Protocol::bcf, {EstimatorKind::est1}));
}

TEST(Attempt, LoneUeIsAdmitted) {
    ScenarioConfig c;
    c.l_max = 10;
    for (auto [p, kind] : {std::pair{Protocol::bcf, EstimatorKind::est1}, std::pair{Protocol::cf_sucre, EstimatorKind::est1},
                           std::pair{Protocol::cf_sucre, EstimatorKind::est2},
                           std::pair{Protocol::cf_sucre, EstimatorKind::est3},
                           std::pair{Protocol::ce_sucre, EstimatorKind::cellular}}) {
        int admitted = 0;
        for (std::uint64_t s = 0; s < 40; ++s) {
            Rng r = make_stream(s, 0, Stream::topology);
            auto net = network(c, uniform_positions(1, 400.0, r), p == Protocol::ce_sucre);
            auto st = streams_for(s, 1);
            const std::vector<std::size_t> active{0};
            const EstimatorSpec spec{kind, NearbyMethod::greedy, c.compensation_factor};
            const auto out = run_attempt(p, spec, net, active, c, st);
            ASSERT_EQ(out.ues.size(), 1u);
            EXPECT_TRUE(out.ues[0].served);
            admitted += out.ues[0].admitted ? 1 : 0;
        }
        if (p == Protocol::bcf) EXPECT_EQ(admitted, 40);
        else EXPECT_GE(admitted, 36) << to_string(p) << " " << to_string(kind);
    }
}

TEST(Attempt, BcfAdmitsDistantCollidersTogether) {
    ScenarioConfig c;
    c.num_pilots = 1;
    auto net = network(c, {{30.0, 30.0}, {370.0, 360.0}});
    auto st = streams_for(3, 0);
    const std::vector<std::size_t> active{0, 1};
    const auto out = run_attempt(Protocol::bcf, {}, net, active, c, st);
    ASSERT_EQ(out.pilots.size(), 1u);
    EXPECT_EQ(out.pilots[0].colliding.size(), 2u);
    EXPECT_EQ(out.pilots[0].admitted.size(), 2u);
    EXPECT_EQ(out.active_pilots, 1);
}

TEST(Attempt, BcfRejectsCoLocatedColliders) {
    ScenarioConfig c;
    c.num_pilots = 1;
    auto net = network(c, {{200.0, 200.0}, {200.0, 200.0}});
    auto st = streams_for(4, 0);
    const std::vector<std::size_t> active{0, 1};
    const auto out = run_attempt(Protocol::bcf, {}, net, active, c, st);
    EXPECT_TRUE(out.pilots[0].admitted.empty());
}

TEST(Attempt, AdmissionRules) {
    ScenarioConfig c;
    c.l_max = 8;
    const LinkBudget link = link_budget(c);
    int multi_winner = 0;
    for (auto [p, kind] : {std::pair{Protocol::bcf, EstimatorKind::est1}, std::pair{Protocol::cf_sucre, EstimatorKind::est2},
                           std::pair{Protocol::cf_sucre, EstimatorKind::est3},
                           std::pair{Protocol::ce_sucre, EstimatorKind::cellular}}) {
        for (std::uint64_t s = 0; s < 30; ++s) {
            Rng r = make_stream(s, 7, Stream::topology);
            auto net = network(c, uniform_positions(40, 400.0, r), p == Protocol::ce_sucre);
            auto st = streams_for(s, 8);
            std::vector<std::size_t> active(12);
            for (std::size_t i = 0; i < active.size(); ++i) active[i] = i * 3;
            const auto out = run_attempt(p, {kind, NearbyMethod::fixed, c.compensation_factor}, net, active, c, st);
            int active_pilots = 0;
            for (const auto& pa : out.pilots) {
                for (auto a : pa.admitted)
                    EXPECT_NE(std::find(pa.winners.begin(), pa.winners.end(), a), pa.winners.end());
                for (auto w : pa.winners)
                    EXPECT_NE(std::find(pa.colliding.begin(), pa.colliding.end(), w), pa.colliding.end());
                if (p == Protocol::bcf && !pa.serving.empty()) {
                    EXPECT_EQ(pa.winners.size(), pa.colliding.size());
                }
                if (p == Protocol::ce_sucre) {
                    EXPECT_EQ(pa.admitted.size(), pa.winners.size() == 1 ? 1u : 0u);
                    multi_winner += pa.winners.size() > 1 ? 1 : 0;
                }
                double alpha = 0.0;
                for (int l : pa.serving) alpha += true_alpha_lt(net.topology(), pa.colliding, static_cast<std::size_t>(l), link);
                EXPECT_NEAR(pa.alpha_true, alpha, 1e-12 * std::max(alpha, 1e-300));
                EXPECT_LE(pa.serving.size(), static_cast<std::size_t>(effective_l_max(p, c, net.topology().num_aps())));
                active_pilots += pa.serving.empty() ? 0 : 1;
            }
            EXPECT_EQ(out.active_pilots, active_pilots);
            for (const auto& u : out.ues)
                if (u.admitted) {
                    EXPECT_TRUE(u.served);
                }
        }
    }
    EXPECT_GT(multi_winner, 0);
}

TEST(Attempt, SingleApNetworkMatchesCellularBaseline) {
    ScenarioConfig cf;
    cf.num_aps = 1;
    cf.antennas_per_ap = cf.bs_antennas;
    cf.dl_power_per_ap_mw = cf.bs_dl_power_mw;
    cf.l_max = 1;
    cf.num_inactive_ues = 200;
    cf.access_probability = 0.02;
    cf.trials = 1;
    ScenarioConfig ce = cf;
    for (std::uint64_t t = 0; t < 4; ++t) {
        const auto a = run_access_campaign(Protocol::cf_sucre, {EstimatorKind::est1}, cf, t);
        const auto b = run_access_campaign(Protocol::ce_sucre, {EstimatorKind::cellular}, ce, t);
        EXPECT_EQ(a.attempts, b.attempts);
        EXPECT_EQ(a.admitted, b.admitted);
        EXPECT_FALSE(a.attempts.empty());
    }
}

TEST(Campaign, NoActivationsGiveAnEmptyCampaign) {
    ScenarioConfig c;
    c.num_inactive_ues = 100;
    c.access_probability = 0.0;
    const auto r = run_access_campaign(Protocol::bcf, {}, c, 0);
    EXPECT_TRUE(r.attempts.empty());
    EXPECT_EQ(r.ra_blocks, 0);
    EXPECT_EQ(r.blocks, c.warmup_blocks + c.measured_blocks);
    EXPECT_TRUE(std::isnan(anaa(std::span<const CampaignResult>(&r, 1))));
}

TEST(Campaign, LoneUserNeedsOneAttempt) {
    ScenarioConfig c;
    c.num_inactive_ues = 1;
    c.access_probability = 1.0;
    const auto r = run_access_campaign(Protocol::bcf, {}, c, 0);
    ASSERT_EQ(r.attempts.size(), static_cast<std::size_t>(c.measured_blocks));
    EXPECT_DOUBLE_EQ(anaa(std::span<const CampaignResult>(&r, 1)), 1.0);
    for (bool a : r.admitted) EXPECT_TRUE(a);
}

TEST(Campaign, AttemptsNeverExceedTheCap) {
    ScenarioConfig c;
    c.num_inactive_ues = 3000;
    c.access_probability = 0.01;
    c.max_attempts = 3;
    c.l_max = 6;
    for (auto p : {Protocol::bcf, Protocol::cf_sucre}) {
        const auto r = run_access_campaign(p, {EstimatorKind::est2, NearbyMethod::greedy}, c, 2);
        ASSERT_FALSE(r.attempts.empty());
        bool some_failed = false;
        for (std::size_t i = 0; i < r.attempts.size(); ++i) {
            EXPECT_GE(r.attempts[i], 1);
            EXPECT_LE(r.attempts[i], 3);
            if (!r.admitted[i]) {
                EXPECT_EQ(r.attempts[i], 3);
                some_failed = true;
            }
        }
        EXPECT_TRUE(some_failed) << to_string(p);
    }
}

TEST(Campaign, DeterministicPerTrial) {
    ScenarioConfig c;
    c.num_inactive_ues = 2000;
    c.l_max = 8;
    const EstimatorSpec spec{EstimatorKind::est3, NearbyMethod::greedy, 8.0};
    const auto a = run_access_campaign(Protocol::cf_sucre, spec, c, 5);
    const auto b = run_access_campaign(Protocol::cf_sucre, spec, c, 5);
    EXPECT_EQ(a.attempts, b.attempts);
    EXPECT_EQ(a.dl_power_sum, b.dl_power_sum);
    const auto other = run_access_campaign(Protocol::cf_sucre, spec, c, 6);
    EXPECT_NE(a.dl_power_sum, other.dl_power_sum);
}
