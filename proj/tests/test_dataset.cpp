#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>

#include "strawdet/dataset.hpp"
#include "strawdet/error.hpp"
#include "strawdet/image.hpp"

using namespace strawdet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("maturity taxonomy is a 3-entry bijection") {
    CHECK(maturity_name(0) == "immature");
    CHECK(maturity_name(1) == "nearly_mature");
    CHECK(maturity_name(2) == "mature");
    for (int i = 0; i < kNumMaturityClasses; ++i)
        CHECK(maturity_id(maturity_name(i)) == i);
    CHECK_THROWS_AS(maturity_name(3), Error);
    CHECK_THROWS_AS(maturity_id("rotten"), Error);
}

TEST_CASE("parse_label_file: single mature record") {
    const auto labels = parse_label_file("2 0.5 0.5 0.1 0.2\n");
    REQUIRE(labels.size() == 1);
    CHECK(labels[0].class_id == 2);
    CHECK(labels[0].cx == 0.5f);
    CHECK(labels[0].cy == 0.5f);
    CHECK(labels[0].w == doctest::Approx(0.1f));
    CHECK(labels[0].h == doctest::Approx(0.2f));
}

TEST_CASE("parse_label_file: empty input and blank lines") {
    CHECK(parse_label_file("").empty());
    CHECK(parse_label_file("\n  \n\n").empty());
}

TEST_CASE("parse_label_file: errors carry line numbers") {
    CHECK_THROWS_WITH_AS(parse_label_file("5 0.5 0.5 0.1 0.1\n"),
                         doctest::Contains("unknown class 5 at line 1"),
                         Error);
    CHECK_THROWS_WITH_AS(
        parse_label_file("0 0.5 0.5 0.1 0.1\n1 0.5 1.5 0.1 0.1\n"),
        doctest::Contains("line 2"), Error);
    CHECK_THROWS_WITH_AS(parse_label_file("0 0.5 0.5 0.1\n"),
                         doctest::Contains("wrong field count"), Error);
    CHECK_THROWS_WITH_AS(parse_label_file("0 0.5 0.5 0.1 0.1 9\n"),
                         doctest::Contains("wrong field count"), Error);
    CHECK_THROWS_AS(parse_label_file("0 0.5 0.5 0.0 0.1\n"), Error);
}

TEST_CASE("labels round trip through serialization") {
    const std::vector<LabelRecord> labels = {
        {0, 0.125f, 0.25f, 0.375f, 0.4375f},
        {2, 0.333333f, 0.666667f, 0.01f, 0.02f},
    };
    const auto back = parse_label_file(serialize_labels(labels));
    REQUIRE(back.size() == labels.size());
    for (size_t i = 0; i < labels.size(); ++i) {
        CHECK(back[i].class_id == labels[i].class_id);
        CHECK(back[i].cx == doctest::Approx(labels[i].cx).epsilon(1e-6));
        CHECK(back[i].h == doctest::Approx(labels[i].h).epsilon(1e-6));
    }
}

TEST_CASE("split_dataset: 100 entries split 90/10") {
    DatasetManifest m;
    for (int i = 0; i < 100; ++i)
        m.entries.push_back({"img" + std::to_string(i), "lab", ""});
    const DatasetManifest s = split_dataset(m, 0.1, 7);
    int train = 0, test = 0;
    for (const ManifestEntry& e : s.entries)
        (e.split == "train" ? train : test) += 1;
    CHECK(train == 90);
    CHECK(test == 10);
}

TEST_CASE("split_dataset: deterministic and a proper partition") {
    DatasetManifest m;
    for (int i = 0; i < 37; ++i)
        m.entries.push_back({"img" + std::to_string(i), "lab", ""});
    const DatasetManifest a = split_dataset(m, 0.1, 3);
    const DatasetManifest b = split_dataset(m, 0.1, 3);
    REQUIRE(a.entries.size() == b.entries.size());
    for (size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].image_path == b.entries[i].image_path);
        CHECK(a.entries[i].split == b.entries[i].split);
    }
    std::set<std::string> seen;
    for (const ManifestEntry& e : a.entries) seen.insert(e.image_path);
    CHECK(seen.size() == 37);  // nothing lost or duplicated
}

TEST_CASE("split_dataset: tiny datasets floor the test share to zero") {
    DatasetManifest m;
    for (int i = 0; i < 3; ++i)
        m.entries.push_back({"img" + std::to_string(i), "lab", ""});
    const DatasetManifest s = split_dataset(m, 0.1, 1);
    int test = 0;
    for (const ManifestEntry& e : s.entries) test += e.split == "test";
    CHECK(test == 0);
    CHECK_THROWS_AS(split_dataset(DatasetManifest{}, 0.1, 1), Error);
}

TEST_CASE("ppm: write-read round trip is bitwise") {
    TempDir dir("strawdet_ppm_test");
    RasterImage img(13, 7);
    for (size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = uint8_t((i * 31) & 0xFF);
    const std::string path = (dir.path / "x.ppm").string();
    write_image(path, img);
    const RasterImage back = read_image(path);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.pixels == img.pixels);
}

TEST_CASE("ppm: header example P6 2 1 255 with six raster bytes") {
    const std::string text = "P6 2 1 255 abcdef";
    const RasterImage img =
        decode_ppm(std::vector<uint8_t>(text.begin(), text.end()));
    CHECK(img.width == 2);
    CHECK(img.height == 1);
    CHECK(img.px(0, 0)[0] == 'a');
    CHECK(img.px(1, 0)[2] == 'f');
}

TEST_CASE("ppm: bad magic, truncation, and maxval are distinct errors") {
    const std::string bad_magic = "P5 2 1 255 abcdef";
    CHECK_THROWS_WITH_AS(
        decode_ppm(std::vector<uint8_t>(bad_magic.begin(), bad_magic.end())),
        doctest::Contains("bad magic"), Error);

    const std::string truncated = "P6 2 2 255 abcdef";
    CHECK_THROWS_WITH_AS(
        decode_ppm(std::vector<uint8_t>(truncated.begin(), truncated.end())),
        doctest::Contains("unexpected end of data"), Error);

    const std::string maxval = "P6 2 1 65535 abcdef";
    CHECK_THROWS_WITH_AS(
        decode_ppm(std::vector<uint8_t>(maxval.begin(), maxval.end())),
        doctest::Contains("maxval"), Error);
}

TEST_CASE("ppm: comments in the header are skipped") {
    const std::string text = "P6\n# width then height\n2 1\n255\nabcdef";
    const RasterImage img =
        decode_ppm(std::vector<uint8_t>(text.begin(), text.end()));
    CHECK(img.width == 2);
}

TEST_CASE("discover_dataset pairs images with labels lexicographically") {
    TempDir dir("strawdet_discover_test");
    for (const char* stem : {"b", "a", "c"}) {
        write_image((dir.path / (std::string(stem) + ".ppm")).string(),
                    RasterImage(2, 2, 9));
        std::ofstream((dir.path / (std::string(stem) + ".txt")).string());
    }
    const DatasetManifest m = discover_dataset(dir.path.string());
    REQUIRE(m.entries.size() == 3);
    CHECK(m.entries[0].image_path < m.entries[1].image_path);
    CHECK(m.entries[1].image_path < m.entries[2].image_path);

    // an image without a label file is an error
    write_image((dir.path / "d.ppm").string(), RasterImage(2, 2, 9));
    CHECK_THROWS_WITH_AS(discover_dataset(dir.path.string()),
                         doctest::Contains("no label file"), Error);
}

TEST_CASE("manifest file round trips") {
    TempDir dir("strawdet_manifest_test");
    DatasetManifest m;
    m.entries.push_back({"a.ppm", "a.txt", "train"});
    m.entries.push_back({"b.ppm", "b.txt", "test"});
    const std::string path = (dir.path / "manifest.tsv").string();
    save_manifest(path, m);
    const DatasetManifest back = load_manifest(path);
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[0].image_path == "a.ppm");
    CHECK(back.entries[0].split == "train");
    CHECK(back.entries[1].split == "test");
}

TEST_CASE("emit_train_config carries the training hyperparameters") {
    TempDir dir("strawdet_cfg_test");
    const std::string path = (dir.path / "train.cfg").string();
    emit_train_config(path);
    const auto kv = parse_train_config(path);
    CHECK(kv.at("momentum") == "0.937");
    CHECK(kv.at("patience") == "20");
    CHECK(kv.at("epochs") == "100");
    CHECK(kv.at("optimizer") == "SGD");
    CHECK(kv.at("batch") == "16");
    CHECK(kv.at("lr") == "0.01");
    CHECK(kv.at("weight_decay") == "0.0005");
    CHECK(kv.at("iou_t") == "0.01");
    CHECK(kv.at("hsv_h") == "0.015");
    CHECK(kv.at("hsv_s") == "0.7");
    CHECK(kv.at("hsv_v") == "0.4");

    // round trip: emit -> parse -> emit yields identical key/value pairs
    const std::string path2 = (dir.path / "train2.cfg").string();
    emit_train_config(path2);
    CHECK(parse_train_config(path2) == kv);
}
