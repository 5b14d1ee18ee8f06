/*
 * Copyright 2026 the umamba authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "umamba/metrics.hpp"

using namespace umamba;

namespace {

Tensor mask2d(int64_t h, int64_t w, const std::vector<uint8_t>& v) { return Tensor::from_labels({h, w}, v); }

Tensor random_mask(Rng& rng, int64_t h, int64_t w, double p) {
    std::vector<uint8_t> v(static_cast<size_t>(h * w));
    for (auto& x : v) x = rng.uniform() < p ? 1 : 0;
    return Tensor::from_labels({h, w}, v);
}

Tensor rect_mask(int64_t h, int64_t w, int64_t y0, int64_t x0, int64_t ry, int64_t rx) {
    std::vector<uint8_t> v(static_cast<size_t>(h * w), 0);
    for (int64_t y = y0; y < y0 + ry; ++y)
        for (int64_t x = x0; x < x0 + rx; ++x) v[static_cast<size_t>(y * w + x)] = 1;
    return Tensor::from_labels({h, w}, v);
}

}  // namespace

TEST_CASE("dsc closed-form cases") {
    Tensor a = rect_mask(6, 6, 1, 1, 2, 2);
    CHECK(dsc(a, a) == 1.0);
    Tensor b = rect_mask(6, 6, 3, 3, 2, 2);
    CHECK(dsc(a, b) == 0.0);
    // |P|=4, |G|=4, overlap 2 -> 0.5
    Tensor p = rect_mask(6, 6, 0, 0, 1, 4);
    Tensor g = rect_mask(6, 6, 0, 2, 1, 4);
    CHECK(dsc(p, g) == doctest::Approx(0.5));
    // both empty -> 1
    Tensor e = Tensor::zeros({6, 6}, DType::U8);
    CHECK(dsc(e, e) == 1.0);
    CHECK(dsc(e, a) == doctest::Approx(0.0));
}

TEST_CASE("dsc and nsd are symmetric") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor p = random_mask(rng, 7, 9, 0.4);
        Tensor g = random_mask(rng, 7, 9, 0.4);
        CHECK(dsc(p, g) == doctest::Approx(dsc(g, p)).epsilon(1e-15));
        CHECK(nsd(p, g, 1.5) == doctest::Approx(nsd(g, p, 1.5)).epsilon(1e-15));
    }
}

TEST_CASE("dsc/nsd invariant to joint translation") {
    Tensor p = rect_mask(12, 12, 2, 2, 3, 4);
    Tensor g = rect_mask(12, 12, 3, 2, 3, 4);
    Tensor ps = rect_mask(12, 12, 6, 5, 3, 4);
    Tensor gs = rect_mask(12, 12, 7, 5, 3, 4);
    CHECK(dsc(p, g) == doctest::Approx(dsc(ps, gs)).epsilon(1e-15));
    CHECK(nsd(p, g, 1.0) == doctest::Approx(nsd(ps, gs, 1.0)).epsilon(1e-15));
}

TEST_CASE("nsd closed-form cases") {
    Tensor a = rect_mask(8, 8, 2, 2, 3, 3);
    CHECK(nsd(a, a, 0.5) == 1.0);
    // tolerance beyond the diagonal saturates at 1 for any nonempty pair
    Tensor b = rect_mask(8, 8, 5, 5, 2, 2);
    CHECK(nsd(a, b, 100.0) == 1.0);
    // empty vs nonempty -> 0, both empty -> 1
    Tensor e = Tensor::zeros({8, 8}, DType::U8);
    CHECK(nsd(e, a, 1.0) == 0.0);
    CHECK(nsd(e, e, 1.0) == 1.0);
}

TEST_CASE("nsd golden vector: two 3x3 squares offset by one voxel at tau 1") {
    Tensor p = rect_mask(8, 8, 2, 2, 3, 3);
    Tensor g = rect_mask(8, 8, 2, 3, 3, 3);
    double got = nsd(p, g, 1.0);
    double want = oracle::nsd_bruteforce(std::vector<uint8_t>(p.data<uint8_t>().begin(), p.data<uint8_t>().end()),
                                         std::vector<uint8_t>(g.data<uint8_t>().begin(), g.data<uint8_t>().end()),
                                         {8, 8}, 1.0);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
    // frozen from the brute-force oracle: every boundary voxel of a 3x3
    // square sits within one voxel of the shifted square's boundary
    CHECK(got == doctest::Approx(1.0));
    // at tau 0.5 the two off-grid columns fall outside the tolerance
    double tight = nsd(p, g, 0.5);
    double tight_want = oracle::nsd_bruteforce(
        std::vector<uint8_t>(p.data<uint8_t>().begin(), p.data<uint8_t>().end()),
        std::vector<uint8_t>(g.data<uint8_t>().begin(), g.data<uint8_t>().end()), {8, 8}, 0.5);
    CHECK(tight == doctest::Approx(tight_want).epsilon(1e-12));
    CHECK(tight == doctest::Approx(0.5));
}

TEST_CASE("nsd respects physical spacing") {
    Tensor p = rect_mask(8, 8, 2, 2, 2, 2);
    Tensor g = rect_mask(8, 8, 4, 2, 2, 2);  // offset 2 voxels along axis 0
    // spacing 1: boundaries are 2 apart on that axis; tau=1 misses some
    double coarse = nsd(p, g, 1.0, {1.0, 1.0});
    // spacing 0.5 shrinks every distance; tau=1 now covers them all
    double fine = nsd(p, g, 1.0, {0.5, 0.5});
    CHECK(fine >= coarse);
    CHECK(fine == 1.0);
}

TEST_CASE("dsc and nsd match brute force on 50 random mask pairs") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        int64_t h = rng.randint(4, 10), w = rng.randint(4, 10);
        Tensor p = random_mask(rng, h, w, 0.35);
        Tensor g = random_mask(rng, h, w, 0.35);
        std::vector<uint8_t> pv(p.data<uint8_t>().begin(), p.data<uint8_t>().end());
        std::vector<uint8_t> gv(g.data<uint8_t>().begin(), g.data<uint8_t>().end());
        CHECK(std::abs(dsc(p, g) - oracle::dsc_bruteforce(pv, gv, -1)) <= 1e-10);
        double tau = rng.uniform(0.5, 3.0);
        CHECK(std::abs(nsd(p, g, tau) - oracle::nsd_bruteforce(pv, gv, {h, w}, tau)) <= 1e-10);
    }
}

TEST_CASE("instance decoding: blobs, ridges and size filtering") {
    SUBCASE("one solid interior blob is one instance") {
        Tensor m = Tensor::zeros({8, 8}, DType::U8);
        for (int64_t y = 2; y < 6; ++y)
            for (int64_t x = 2; x < 6; ++x) m.set({y, x}, 1.0);
        InstanceMap im = instances_from_semantic(m);
        CHECK(im.count == 1);
    }
    SUBCASE("two interior blobs split by a boundary ridge are two instances") {
        Tensor m = Tensor::zeros({7, 7}, DType::U8);
        for (int64_t y = 1; y < 6; ++y) {
            for (int64_t x = 1; x < 3; ++x) m.set({y, x}, 1.0);
            m.set({y, 3}, 2.0);  // ridge
            for (int64_t x = 4; x < 6; ++x) m.set({y, x}, 1.0);
        }
        InstanceMap im = instances_from_semantic(m);
        CHECK(im.count == 2);
        // ridge pixels were assigned to one of the neighbors, none left over
        for (int64_t y = 1; y < 6; ++y) CHECK(im.labels[static_cast<size_t>(y * 7 + 3)] > 0);
    }
    SUBCASE("components below min_size are dropped") {
        Tensor m = Tensor::zeros({6, 6}, DType::U8);
        m.set({0, 0}, 1.0);  // single-pixel speck
        for (int64_t y = 2; y < 5; ++y)
            for (int64_t x = 2; x < 5; ++x) m.set({y, x}, 1.0);
        InstanceMap im = instances_from_semantic(m, 4);
        CHECK(im.count == 1);
        CHECK(im.labels[0] == 0);
    }
}

TEST_CASE("hand-constructed touching cells: two instances with fixed pixel assignments") {
    // 10x10 map: two interiors separated only by one boundary column; the
    // column's pixels join their nearest interior (left at x<=4, right west
    // of x=5... all at distance 1, ties resolve to the lower label).
    Tensor m = Tensor::zeros({10, 10}, DType::U8);
    for (int64_t y = 2; y < 8; ++y) {
        for (int64_t x = 1; x < 5; ++x) m.set({y, x}, 1.0);
        m.set({y, 5}, 2.0);
        for (int64_t x = 6; x < 9; ++x) m.set({y, x}, 1.0);
    }
    InstanceMap im = instances_from_semantic(m);
    REQUIRE(im.count == 2);
    int32_t left = im.labels[2 * 10 + 1];
    int32_t right = im.labels[2 * 10 + 6];
    CHECK(left != right);
    for (int64_t y = 2; y < 8; ++y) {
        CHECK(im.labels[static_cast<size_t>(y * 10 + 4)] == left);
        CHECK(im.labels[static_cast<size_t>(y * 10 + 6)] == right);
        // boundary column: equidistant from both, deterministic tie to the
        // lower instance id
        CHECK(im.labels[static_cast<size_t>(y * 10 + 5)] == std::min(left, right));
    }
}

TEST_CASE("instance f1 closed-form cases") {
    SUBCASE("identical maps give f1 = 1") {
        Tensor m = Tensor::zeros({8, 8}, DType::U8);
        for (int64_t y = 1; y < 4; ++y)
            for (int64_t x = 1; x < 4; ++x) m.set({y, x}, 1.0);
        for (int64_t y = 5; y < 8; ++y)
            for (int64_t x = 5; x < 8; ++x) m.set({y, x}, 1.0);
        InstanceMap im = instances_from_semantic(m);
        REQUIRE(im.count == 2);
        F1Result r = f1_instance(im, im, 0.5);
        CHECK(r.f1 == 1.0);
    }
    SUBCASE("no predictions against nonempty gt gives f1 = 0") {
        InstanceMap empty;
        empty.shape = {4, 4};
        empty.labels.assign(16, 0);
        empty.count = 0;
        InstanceMap one = empty;
        one.count = 1;
        for (int i = 0; i < 4; ++i) one.labels[static_cast<size_t>(i)] = 1;
        F1Result r = f1_instance(empty, one, 0.5);
        CHECK(r.f1 == 0.0);
        CHECK(r.recall == 0.0);
    }
    SUBCASE("2 gt, 1 exact prediction: p=1, r=0.5, f1=2/3") {
        InstanceMap gt;
        gt.shape = {4, 8};
        gt.labels.assign(32, 0);
        for (int i = 0; i < 8; ++i) gt.labels[static_cast<size_t>(i)] = i < 4 ? 1 : 2;
        gt.count = 2;
        InstanceMap pred = gt;
        pred.count = 1;
        for (auto& v : pred.labels)
            if (v == 2) v = 0;
        F1Result r = f1_instance(pred, gt, 0.5);
        CHECK(r.precision == doctest::Approx(1.0));
        CHECK(r.recall == doctest::Approx(0.5));
        CHECK(r.f1 == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("both empty is perfect agreement") {
        InstanceMap empty;
        empty.shape = {4, 4};
        empty.labels.assign(16, 0);
        empty.count = 0;
        F1Result r = f1_instance(empty, empty, 0.5);
        CHECK(r.f1 == 1.0);
    }
}

TEST_CASE("f1 is invariant to instance relabeling") {
    Rng rng(31);
    InstanceMap a;
    a.shape = {6, 6};
    a.labels.assign(36, 0);
    for (int i = 0; i < 6; ++i) a.labels[static_cast<size_t>(i)] = 1;
    for (int i = 12; i < 20; ++i) a.labels[static_cast<size_t>(i)] = 2;
    a.count = 2;
    InstanceMap b = a;  // relabeled copy: swap ids 1 and 2
    for (auto& v : b.labels) v = v == 1 ? 2 : v == 2 ? 1 : 0;
    F1Result self = f1_instance(a, a, 0.5);
    F1Result swapped = f1_instance(b, a, 0.5);
    CHECK(self.f1 == swapped.f1);
}

TEST_CASE("f1 is invariant to joint translation of both maps") {
    auto shifted = [](const InstanceMap& m, int64_t dy, int64_t dx) {
        InstanceMap out;
        out.shape = m.shape;
        out.count = m.count;
        out.labels.assign(m.labels.size(), 0);
        int64_t h = m.shape[0], w = m.shape[1];
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) {
                int64_t sy = y - dy, sx = x - dx;
                if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                out.labels[static_cast<size_t>(y * w + x)] = m.labels[static_cast<size_t>(sy * w + sx)];
            }
        return out;
    };
    InstanceMap a;
    a.shape = {8, 8};
    a.labels.assign(64, 0);
    for (int64_t y = 0; y < 2; ++y)
        for (int64_t x = 0; x < 2; ++x) a.labels[static_cast<size_t>(y * 8 + x)] = 1;
    for (int64_t y = 3; y < 5; ++y)
        for (int64_t x = 1; x < 4; ++x) a.labels[static_cast<size_t>(y * 8 + x)] = 2;
    a.count = 2;
    InstanceMap b = a;
    for (auto& v : b.labels)
        if (v == 2) v = 0;  // drop one instance to make F1 nontrivial
    b.count = 1;
    F1Result base = f1_instance(b, a, 0.5);
    F1Result moved = f1_instance(shifted(b, 2, 3), shifted(a, 2, 3), 0.5);
    CHECK(base.f1 == moved.f1);
    CHECK(base.precision == moved.precision);
    CHECK(base.recall == moved.recall);
}

TEST_CASE("f1 matches the rescanning brute-force matcher on random instance maps") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        int64_t h = 9, w = 9;
        auto make = [&](int32_t hi) {
            InstanceMap m;
            m.shape = {h, w};
            m.labels.assign(static_cast<size_t>(h * w), 0);
            int32_t n = static_cast<int32_t>(rng.randint(0, hi));
            for (int32_t lab = 1; lab <= n; ++lab) {
                int64_t y0 = rng.randint(0, h - 2), x0 = rng.randint(0, w - 2);
                for (int64_t y = y0; y < std::min(h, y0 + 3); ++y)
                    for (int64_t x = x0; x < std::min(w, x0 + 3); ++x)
                        m.labels[static_cast<size_t>(y * w + x)] = lab;
            }
            // renumber labels that may have been fully painted over
            std::vector<int32_t> remap(static_cast<size_t>(n) + 1, 0);
            int32_t kept = 0;
            for (auto v : m.labels)
                if (v > 0 && remap[static_cast<size_t>(v)] == 0) remap[static_cast<size_t>(v)] = ++kept;
            for (auto& v : m.labels)
                if (v > 0) v = remap[static_cast<size_t>(v)];
            m.count = kept;
            return m;
        };
        InstanceMap p = make(4), g = make(4);
        F1Result lib = f1_instance(p, g, 0.5);
        auto want = oracle::f1_bruteforce(p.labels, g.labels, p.count, g.count, 0.5);
        CHECK(std::abs(lib.f1 - want.f1) <= 1e-10);
        CHECK(std::abs(lib.precision - want.precision) <= 1e-10);
        CHECK(std::abs(lib.recall - want.recall) <= 1e-10);
    }
}

TEST_CASE("eval report text is canonical") {
    EvalReport r;
    r.semantic_rows.push_back({"case_0", 1, 0.5, 0.75});
    r.semantic_rows.push_back({"case_1", 1, 1.0, 1.0});
    std::string text = r.to_text();
    CHECK(text == "# case class dsc nsd\n"
                  "case_0 1 0.500000 0.750000\n"
                  "case_1 1 1.000000 1.000000\n"
                  "aggregate mean 0.750000 0.875000 sd 0.353553 0.176777\n");
    CHECK(r.mean_dsc() == doctest::Approx(0.75));
}
