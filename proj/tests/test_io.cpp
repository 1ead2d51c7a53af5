#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bls/io.hpp"

using namespace bls;

TEST_CASE("distribution records round-trip through {kind, params} JSON") {
    const auto lat = MarkDistribution::lattice(1.0, {{1, 0.5}, {-1, 0.5}});
    const auto j = io::to_json(lat);
    CHECK(j["kind"] == "lattice");
    CHECK(j["b"].get<double>() == 1.0);
    const auto back = io::distribution_from_json(j);
    for (double beta : {0.1, 0.77, 3.0})
        CHECK(back.phi(beta) == doctest::Approx(lat.phi(beta)).epsilon(1e-15));

    // the documented record shape parses as-is
    const auto parsed = io::distribution_from_json(
        nlohmann::json::parse(R"({"kind": "lattice", "b": 1.0, "atoms": [[1, 0.5], [-1, 0.5]]})"));
    CHECK(parsed.phi(0.5) == doctest::Approx(std::cos(0.5)).epsilon(1e-15));

    const auto gauss = MarkDistribution::gaussian(1.2345678901234567);
    const auto g2 = io::distribution_from_json(io::to_json(gauss));
    CHECK(g2.gaussian_sigma() == doctest::Approx(gauss.gaussian_sigma()).epsilon(1e-15));

    const auto uv = io::distribution_from_json(io::to_json(MarkDistribution::unit_vector(4)));
    CHECK(uv.unit_vector_dim() == 4);

    CHECK_THROWS_AS(io::to_json(MarkDistribution::custom({"c", [](double) { return 1.0; }, {}, 1.0})),
                    std::invalid_argument);
    CHECK_THROWS_AS(io::distribution_from_json(nlohmann::json{{"kind", "nope"}}),
                    std::invalid_argument);
}

TEST_CASE("distribution spec strings") {
    CHECK(io::distribution_from_spec("bernoulli").kind() == MarkKind::bernoulli);
    CHECK(io::distribution_from_spec("gaussian:sigma=2").gaussian_sigma() == 2.0);
    CHECK(io::distribution_from_spec("unit_vector:d=3").unit_vector_dim() == 3);
    const auto lat = io::distribution_from_spec("lattice:b=0.5,atoms=1:0.25;-1:0.25;0:0.5");
    CHECK(lat.lattice_spacing() == 0.5);
    CHECK_THROWS(io::distribution_from_spec("weird:x=1"));
}

TEST_CASE("correlator config JSON round trip") {
    CorrelatorConfig cfg;
    cfg.lambda = 0.75;
    cfg.dist = MarkDistribution::gaussian(0.5);
    cfg.domain = Domain::upper_half_plane;
    cfg.points = {{{0.125, 1.5}, 0.7}, {{-2.25, 0.375}, -0.7}};
    const auto back = io::correlator_config_from_json(io::to_json(cfg));
    CHECK(back.lambda == cfg.lambda);
    CHECK(back.domain == cfg.domain);
    REQUIRE(back.points.size() == 2);
    CHECK(back.points[1].z == cfg.points[1].z);
    CHECK(back.points[1].beta == cfg.points[1].beta);
}

TEST_CASE("coefficient table CSV header is fixed") {
    blocks::CoeffTable t;
    t.pmax = 1;
    t.residual = 0.5;
    t.entries.push_back({{0, 0}, 0.1, 0.1, 1.0});
    const auto csv = io::coeff_table_csv(t);
    CHECK(csv.substr(0, csv.find('\n')) == "p,p_bar,delta,delta_bar,coeff,residual");
}

TEST_CASE("loop dump round trip is bit exact") {
    mc::PhiloxStream rng(5, 0);
    std::vector<mc::LoopPath> loops;
    for (int i = 0; i < 4; ++i) {
        mc::LoopPath loop;
        loop.center = {0.5 * i, -1.0};
        loop.duration = 0.7 + i;
        loop.vertices = mc::sample_bridge(loop.center, loop.duration, 64, rng);
        loops.push_back(std::move(loop));
    }
    std::stringstream buf;
    io::dump_loops(buf, loops);
    const auto back = io::load_loops(buf);
    REQUIRE(back.size() == loops.size());
    for (size_t i = 0; i < loops.size(); ++i) {
        CHECK(back[i].center == loops[i].center);
        CHECK(back[i].duration == loops[i].duration);
        REQUIRE(back[i].vertices.size() == loops[i].vertices.size());
        bool same = true;
        for (size_t k = 0; k < loops[i].vertices.size(); ++k)
            same = same && back[i].vertices[k] == loops[i].vertices[k];
        CHECK(same);
    }
}
