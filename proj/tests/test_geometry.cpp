#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "snowdg/boundary_distance.hpp"
#include "snowdg/geometry.hpp"

using namespace snowdg::geom;

namespace {
double hausdorff_sym(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    double d = 0.0;
    for (const auto& p : a) d = std::max(d, oracles::nearest_distance(p, b));
    for (const auto& p : b) d = std::max(d, oracles::nearest_distance(p, a));
    return d;
}
} // namespace

TEST_CASE("similarity composition and inversion") {
    const auto& s = snowflake_ifs();

    SECTION("identity is neutral") {
        const Similarity id = Similarity::identity();
        const Similarity c = compose(id, s[1]);
        CHECK(c.scale == s[1].scale);
        CHECK(c.rot == s[1].rot);
        CHECK(c.shift.x == s[1].shift.x);
        CHECK(c.shift.y == s[1].shift.y);
    }

    SECTION("s_1 o s_1 fixes the origin and doubles the rotation") {
        const Similarity c = compose(s[0], s[0]);
        CHECK(c.scale == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(c.rot == 2);
        CHECK(c.shift.norm() == 0.0);
    }

    SECTION("s_2 o s_2 lands at (0, 8/9)") {
        const Similarity c = compose(s[1], s[1]);
        CHECK(c.scale == Catch::Approx(1.0 / 9.0).epsilon(1e-15));
        CHECK(c.rot == 0);
        CHECK(c.shift.x == Catch::Approx(0.0).margin(1e-15));
        CHECK(c.shift.y == Catch::Approx(8.0 / 9.0).epsilon(1e-15));
    }

    SECTION("associativity and inverse at random points") {
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> U(-2.0, 2.0);
        std::uniform_int_distribution<int> R(0, 11);
        std::uniform_real_distribution<double> S(0.1, 3.0);
        for (int trial = 0; trial < 200; ++trial) {
            const Similarity a(S(rng), R(rng), {U(rng), U(rng)});
            const Similarity b(S(rng), R(rng), {U(rng), U(rng)});
            const Similarity c(S(rng), R(rng), {U(rng), U(rng)});
            const Vec2 x{U(rng), U(rng)};
            const Vec2 lhs = compose(a, compose(b, c))(x);
            const Vec2 rhs = compose(compose(a, b), c)(x);
            REQUIRE(lhs.dist(rhs) < 1e-14);
            const Vec2 back = invert(a)(a(x));
            REQUIRE(back.dist(x) < 1e-14);
        }
    }
}

TEST_CASE("snowflake IFS matches its defining affine forms") {
    const auto& s = snowflake_ifs();
    CHECK(s[0].scale == Catch::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(s[0].rot == 1);
    CHECK(s[0].shift.norm() == 0.0);
    CHECK(s[1].shift.x == Catch::Approx(0.0).margin(1e-16));
    CHECK(s[1].shift.y == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
    double sum_sq = 0.0;
    for (const auto& m : s) sum_sq += m.scale * m.scale;
    CHECK(sum_sq == Catch::Approx(1.0).epsilon(1e-15)); // area partition
}

TEST_CASE("koch IFS matches its defining affine forms") {
    const auto& t = koch_ifs();
    CHECK(t[0]({1.0, 0.0}).dist({1.0 / 3.0, 0.0}) < 1e-15);
    CHECK(t[2].shift.x == Catch::Approx(0.5).epsilon(1e-15));
    CHECK(t[2].shift.y == Catch::Approx(0.5 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(t[3]({1.0, 0.0}).dist({1.0, 0.0}) < 1e-15); // right endpoint fixed
}

TEST_CASE("reference charts") {
    const auto& rc = reference_charts();

    SECTION("gamma endpoints and the apex of F_1") {
        for (int i = 1; i <= 6; ++i) {
            CHECK(rc.face_chart(i)({0.0, 0.0}).dist(rc.p(i)) < 1e-15);
            CHECK(rc.face_chart(i)({1.0, 0.0}).dist(rc.p(i + 1)) < 1e-14);
        }
        const Vec2 apex = rc.face_chart(1)(koch_apex());
        CHECK(apex.dist({1.0 / std::sqrt(3.0), 0.0}) < 1e-15);
    }

    SECTION("beta_1 sends the apex to p_2") {
        const Vec2 apex = rc.pair_chart(1)(koch_apex());
        CHECK(apex.dist(rc.p(2)) < 1e-14);
    }

    SECTION("chart coverage of the boundary") {
        const int depth = 5;
        const auto ours = sample_snowflake_boundary(depth);
        const auto classic = oracles::edge_replacement_boundary(depth + 1); // unit faces start one level down
        CHECK(hausdorff_sym(ours, classic) < 2.0 * std::pow(3.0, -depth));
    }

    SECTION("pair charts cover the same point sets as face pairs") {
        const int depth = 4;
        const auto base = sample_koch(depth);
        for (int j = 1; j <= 6; ++j) {
            std::vector<Vec2> pair_pts, face_pts;
            for (const auto& p : base) pair_pts.push_back(rc.pair_chart(j)(p));
            for (const auto& p : sample_koch(depth + 1)) {
                face_pts.push_back(rc.face_chart(j)(p));
                face_pts.push_back(rc.face_chart(j + 1)(p));
            }
            CHECK(hausdorff_sym(pair_pts, face_pts) < 2.0 * std::pow(3.0, -depth));
        }
    }
}

TEST_CASE("koch prefractal sampling") {
    const auto d0 = sample_koch(0);
    REQUIRE(d0.size() == 2);
    CHECK(d0[0].dist({0.0, 0.0}) == 0.0);
    CHECK(d0[1].dist({1.0, 0.0}) == 0.0);

    const auto d1 = sample_koch(1);
    REQUIRE(d1.size() == 5);
    CHECK(d1[1].dist({1.0 / 3.0, 0.0}) < 1e-15);
    CHECK(d1[2].dist(koch_apex()) < 1e-15);
    CHECK(d1[3].dist({2.0 / 3.0, 0.0}) < 1e-15);

    SECTION("nestedness: depth-k points appear at depth k+1") {
        for (int k = 0; k <= 3; ++k) {
            const auto coarse = sample_koch(k);
            const auto fine = sample_koch(k + 1);
            for (std::size_t i = 0; i < coarse.size(); ++i) REQUIRE(coarse[i].dist(fine[4 * i]) < 1e-14);
        }
    }

    SECTION("depth guard") { CHECK_THROWS_AS(sample_koch(13), std::invalid_argument); }

    SECTION("curve fits the half-diameter disc about the chord midpoint") {
        // containment backing the branch-and-bound pruning radius
        const auto pts = sample_koch(8);
        const Vec2 mid{0.5, 0.0};
        for (const auto& p : pts) REQUIRE(p.dist(mid) <= 0.5 + 1e-12);
    }

    SECTION("attractor containment of the sub-boundaries") {
        const int depth = 4;
        const auto ours = sample_snowflake_boundary(depth);
        const auto oracle = oracles::edge_replacement_boundary(depth + 1);
        for (const auto& m : snowflake_ifs()) {
            std::vector<Vec2> img, ref;
            for (const auto& p : ours) img.push_back(m(p));
            for (const auto& p : oracle) ref.push_back(m(p));
            for (std::size_t k = 0; k < img.size(); k += 5)
                REQUIRE(oracles::nearest_distance(img[k], ref) <= std::pow(3.0, -depth));
        }
    }
}

TEST_CASE("boundary distance") {
    SECTION("boundary points have distance zero") {
        for (const auto& p : sample_snowflake_boundary(3)) REQUIRE(boundary_distance(p, 1e-10) <= 1e-10);
    }

    SECTION("central element of the level-2 tiling sits at half its diameter") {
        const auto& s = snowflake_ifs();
        const Similarity chart = compose(s[0], s[0]); // word (1,1)
        const double dhat = min_vertex_boundary_distance(chart, 1e-12);
        CHECK(dhat == Catch::Approx(1.0 / 3.0).epsilon(1e-9)); // h_K/2 with h_K = 2/3
    }

    SECTION("matches a dense point-cloud oracle at the origin") {
        const auto cloud = oracles::edge_replacement_boundary(8);
        const double brute = oracles::nearest_distance({0.0, 0.0}, cloud);
        const double bb = boundary_distance({0.0, 0.0}, 1e-10);
        CHECK(bb <= brute + 1e-10);
        CHECK(bb >= brute - 2.0 * std::pow(3.0, -8)); // cloud resolution slack
    }

    SECTION("random interior points agree with the oracle") {
        const auto cloud = oracles::edge_replacement_boundary(8);
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> U(-0.6, 0.6);
        for (int k = 0; k < 25; ++k) {
            const Vec2 q{U(rng), U(rng)};
            const double brute = oracles::nearest_distance(q, cloud);
            const double bb = boundary_distance(q, 1e-10);
            REQUIRE(bb <= brute + 1e-10);
            REQUIRE(bb >= brute - 2.0 * std::pow(3.0, -8));
        }
    }
}
