#include <cmath>

#include <doctest.h>

#include "strawdet/detect.hpp"
#include "strawdet/error.hpp"
#include "strawdet/rng.hpp"
#include "strawdet/runtime.hpp"
#include "support/synthetic.hpp"

using namespace strawdet;

TEST_CASE("letterbox: 2208x1242 lands at 640x360 with 140px vertical pads") {
    const RasterImage img(2208, 1242, 50);
    const auto [boxed, t] = letterbox(img, 640);
    CHECK(boxed.width == 640);
    CHECK(boxed.height == 640);
    CHECK(t.scale == doctest::Approx(0.289855).epsilon(1e-5));
    CHECK(t.pad_x == 0);
    CHECK(t.pad_y == 140);
    // padding rows stay gray
    CHECK(boxed.px(320, 10)[0] == 114);
    CHECK(boxed.px(320, 629)[1] == 114);
    // content rows carry the source value
    CHECK(boxed.px(320, 320)[0] == 50);
}

TEST_CASE("letterbox: square input at target size is the identity") {
    RasterImage img(640, 640, 0);
    img.px(17, 23)[1] = 200;
    const auto [boxed, t] = letterbox(img, 640);
    CHECK(t.scale == 1.0);
    CHECK(t.pad_x == 0);
    CHECK(t.pad_y == 0);
    CHECK(boxed.pixels == img.pixels);
}

TEST_CASE("letterbox: zero-size image errors") {
    CHECK_THROWS_AS(letterbox(RasterImage(), 640), Error);
}

TEST_CASE("unletterbox(letterbox) recovers boxes within 0.5 px") {
    Rng rng(31);
    const LetterboxTransform t = letterbox(RasterImage(1111, 777, 0), 640).second;
    for (int i = 0; i < 100; ++i) {
        Detection orig;
        orig.cx = float(rng.uniform(0, 1111));
        orig.cy = float(rng.uniform(0, 777));
        orig.w = float(rng.uniform(1, 300));
        orig.h = float(rng.uniform(1, 300));
        Detection boxed = orig;
        boxed.cx = float(orig.cx * t.scale + t.pad_x);
        boxed.cy = float(orig.cy * t.scale + t.pad_y);
        boxed.w = float(orig.w * t.scale);
        boxed.h = float(orig.h * t.scale);
        const Detection back = unletterbox(boxed, t);
        CHECK(std::fabs(back.cx - orig.cx) <= 0.5f);
        CHECK(std::fabs(back.cy - orig.cy) <= 0.5f);
        CHECK(std::fabs(back.w - orig.w) <= 0.5f);
        CHECK(std::fabs(back.h - orig.h) <= 0.5f);
    }
}

namespace {

std::array<Tensor, 3> zero_heads(int nc, int size) {
    std::array<Tensor, 3> heads;
    const AnchorSet a = AnchorSet::defaults();
    for (int s = 0; s < 3; ++s)
        heads[s] = Tensor(1, 3 * (nc + 5), size / a.strides[s],
                          size / a.strides[s]);
    return heads;
}

} // namespace

TEST_CASE("decode: zero logits at cell (0,0) give the documented box") {
    const auto heads = zero_heads(3, 64);
    const auto dets = decode(heads, AnchorSet::defaults(), 0.2f, 3);
    REQUIRE(!dets.empty());
    // all scores are exactly sigma(0)^2 = 0.25
    for (const Detection& d : dets) CHECK(d.score == doctest::Approx(0.25));

    bool found = false;
    for (const Detection& d : dets) {
        if (d.cx == doctest::Approx(4.0) && d.cy == doctest::Approx(4.0) &&
            d.w == doctest::Approx(10.0) && d.h == doctest::Approx(13.0))
            found = true;
    }
    CHECK(found);
}

TEST_CASE("decode: zero logits emit nothing at the 0.25 threshold") {
    const auto heads = zero_heads(3, 64);
    CHECK(decode(heads, AnchorSet::defaults(), 0.25f, 3).empty());
}

TEST_CASE("decode: unreachable threshold gives an empty list") {
    auto heads = zero_heads(3, 64);
    for (Tensor& h : heads)
        for (float& v : h.data) v = 5.0f;
    CHECK(decode(heads, AnchorSet::defaults(), 1.1f, 3).empty());
}

TEST_CASE("decode: saturated logits give score 1 within 1e-6") {
    auto heads = zero_heads(3, 64);
    heads[0].at(0, 4, 0, 0) = 1e9f;  // obj, anchor 0
    heads[0].at(0, 5, 0, 0) = 1e9f;  // class 0
    const auto dets = decode(heads, AnchorSet::defaults(), 0.9f, 3);
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].score == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(dets[0].class_id == 0);
}

TEST_CASE("decode: channel mismatch errors") {
    auto heads = zero_heads(3, 64);
    heads[1] = Tensor(1, 23, 4, 4);
    CHECK_THROWS_WITH_AS(decode(heads, AnchorSet::defaults(), 0.5f, 3),
                         doctest::Contains("channels"), Error);
}

TEST_CASE("decode is monotone in the confidence threshold") {
    Rng rng(32);
    auto heads = zero_heads(3, 64);
    for (Tensor& h : heads)
        for (float& v : h.data) v = float(rng.uniform(-3.0, 3.0));
    const AnchorSet anchors = AnchorSet::defaults();
    const auto low = decode(heads, anchors, 0.3f, 3);
    const auto high = decode(heads, anchors, 0.6f, 3);
    CHECK(high.size() <= low.size());
    for (const Detection& d : high) {
        bool present = false;
        for (const Detection& l : low)
            present |= l.cx == d.cx && l.cy == d.cy && l.score == d.score &&
                       l.class_id == d.class_id;
        CHECK(present);
    }
}

TEST_CASE("decode after forward yields strictly positive box sizes") {
    const ModelGraph g = build_model(ArchId::yolov5s, 3);
    const Runtime rt(g, init_weights(g, 77));
    Rng rng(78);
    Tensor in(1, 3, 64, 64);
    for (float& v : in.data) v = float(rng.uniform01());
    const HeadOutputs heads = rt.forward(in);
    const auto dets = decode(heads, AnchorSet::defaults(), 0.01f, 3);
    REQUIRE(!dets.empty());
    for (const Detection& d : dets) {
        CHECK(d.w > 0.0f);
        CHECK(d.h > 0.0f);
        CHECK(d.score >= 0.0f);
        CHECK(d.score <= 1.0f);
    }
}

TEST_CASE("nms: singleton passes through") {
    const Detection d{10, 10, 5, 5, 1, 0.7f};
    const auto kept = nms({d}, 0.45f);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].score == 0.7f);
}

TEST_CASE("nms: heavy same-class overlap keeps only the stronger box") {
    Detection a{50, 50, 20, 20, 2, 0.9f};
    Detection b{51, 50, 20, 20, 2, 0.8f};  // IoU ~0.9
    const auto kept = nms({b, a}, 0.45f);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].score == 0.9f);
}

TEST_CASE("nms: identical geometry in different classes both survive") {
    Detection a{50, 50, 20, 20, 0, 0.9f};
    Detection b{50, 50, 20, 20, 1, 0.8f};
    const auto kept = nms({a, b}, 0.45f);
    CHECK(kept.size() == 2);
}

TEST_CASE("nms is idempotent and score-descending") {
    Rng rng(33);
    std::vector<Detection> dets;
    for (int i = 0; i < 60; ++i)
        dets.push_back({float(rng.uniform(0, 100)), float(rng.uniform(0, 100)),
                        float(rng.uniform(4, 30)), float(rng.uniform(4, 30)),
                        int(rng.below(3)), float(rng.uniform01())});
    const auto once = nms(dets, 0.45f);
    const auto twice = nms(once, 0.45f);
    REQUIRE(once.size() == twice.size());
    for (size_t i = 0; i < once.size(); ++i)
        CHECK(once[i].score == twice[i].score);
    for (size_t i = 1; i < once.size(); ++i)
        CHECK(once[i - 1].score >= once[i].score);
    // survivors of one class never overlap at or above the threshold
    for (size_t i = 0; i < once.size(); ++i)
        for (size_t j = i + 1; j < once.size(); ++j)
            if (once[i].class_id == once[j].class_id)
                CHECK(iou(to_box(once[i]), to_box(once[j])) < 0.45f);
}

TEST_CASE("render: empty detections leave the image unchanged") {
    const RasterImage img(60, 40, 90);
    const RasterImage out = render(img, {});
    CHECK(out.pixels == img.pixels);
}

TEST_CASE("render: border pixel count and per-class colors") {
    const RasterImage img(100, 100, 0);
    Detection d{50, 50, 20, 10, 2, 0.9f};  // mature, pink
    const RasterImage out = render(img, {d});
    size_t changed = 0;
    bool color_ok = true;
    for (size_t i = 0; i < img.pixels.size(); i += 3) {
        if (out.pixels[i] != img.pixels[i] ||
            out.pixels[i + 1] != img.pixels[i + 1] ||
            out.pixels[i + 2] != img.pixels[i + 2]) {
            ++changed;
            color_ok &= out.pixels[i] == 255 && out.pixels[i + 1] == 105 &&
                        out.pixels[i + 2] == 180;
        }
    }
    // 2px borders of a 21x11 rectangle: 4*(W+H) - 16 distinct pixels
    CHECK(changed == size_t(4 * (21 + 11) - 16));
    CHECK(color_ok);

    // immature renders red
    const RasterImage red = render(img, {{50, 50, 20, 10, 0, 0.9f}});
    CHECK(red.px(40, 45)[0] == 255);
    CHECK(red.px(40, 45)[1] == 0);
    CHECK(red.px(40, 45)[2] == 0);
}

TEST_CASE("render: boxes past the border are clipped, not rejected") {
    const RasterImage img(40, 40, 0);
    const RasterImage out = render(img, {{0, 0, 30, 30, 1, 0.5f}});
    CHECK(out.pixels != img.pixels);
}

TEST_CASE("detection text round trips at 4 decimals") {
    std::vector<Detection> dets = {{12.5f, 7.25f, 30.0f, 40.0f, 2, 0.875f},
                                   {1.0f, 2.0f, 3.0f, 4.0f, 0, 0.125f}};
    const std::string text = format_detections(dets);
    CHECK(text == "2 0.8750 12.5000 7.2500 30.0000 40.0000\n"
                  "0 0.1250 1.0000 2.0000 3.0000 4.0000\n");
    const auto back = parse_detections(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].class_id == 2);
    CHECK(back[0].score == doctest::Approx(0.875f));
    CHECK(parse_detections("").empty());
    CHECK_THROWS_AS(parse_detections("1 0.5 nonsense"), Error);
}

TEST_CASE("ideal logits decode back to their boxes within 1 px") {
    Rng rng(34);
    const AnchorSet anchors = AnchorSet::defaults();
    const LetterboxTransform t = letterbox(RasterImage(480, 360, 0), 640).second;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Detection> targets;
        for (int i = 0; i < 3; ++i) {
            Detection d;
            d.cx = float(160 * i + 80 + rng.uniform(-10, 10));
            d.cy = float(180 + rng.uniform(-40, 40));
            d.w = float(rng.uniform(40, 90));
            d.h = float(rng.uniform(40, 90));
            d.class_id = int(rng.below(3));
            // to letterbox frame
            Detection lb = d;
            lb.cx = float(d.cx * t.scale + t.pad_x);
            lb.cy = float(d.cy * t.scale + t.pad_y);
            lb.w = float(d.w * t.scale);
            lb.h = float(d.h * t.scale);
            targets.push_back(lb);
        }
        const auto heads = synthetic::make_ideal_heads(targets, anchors, 3, 640);
        const auto dets = nms(decode(heads, anchors, 0.25f, 3), 0.45f);
        REQUIRE(dets.size() == targets.size());
        for (const Detection& want : targets) {
            bool matched = false;
            for (const Detection& got : dets)
                if (got.class_id == want.class_id &&
                    std::fabs(got.cx - want.cx) <= 1.0f &&
                    std::fabs(got.cy - want.cy) <= 1.0f &&
                    std::fabs(got.w - want.w) <= 1.5f &&
                    std::fabs(got.h - want.h) <= 1.5f)
                    matched = true;
            CHECK(matched);
        }
    }
}
