#include "strawdet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "strawdet/error.hpp"
#include "strawdet/rng.hpp"

namespace fs = std::filesystem;

namespace strawdet {

namespace {
const std::array<std::string, 3> kMaturityNames = {"immature", "nearly_mature",
                                                   "mature"};
}

const std::string& maturity_name(int class_id) {
    require(class_id >= 0 && class_id < kNumMaturityClasses,
            "maturity_name: bad class id ", class_id);
    return kMaturityNames[class_id];
}

int maturity_id(const std::string& name) {
    for (int i = 0; i < kNumMaturityClasses; ++i)
        if (kMaturityNames[i] == name) return i;
    fail("maturity_id: unknown maturity '", name, "'");
}

std::vector<LabelRecord> parse_label_file(const std::string& text) {
    std::vector<LabelRecord> labels;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        LabelRecord rec;
        ls >> rec.class_id >> rec.cx >> rec.cy >> rec.w >> rec.h;
        require(!ls.fail(), "label: wrong field count at line ", line_no,
                ": '", line, "'");
        std::string extra;
        require(!(ls >> extra), "label: wrong field count at line ", line_no,
                ": '", line, "'");
        require(rec.class_id >= 0 && rec.class_id < kNumMaturityClasses,
                "label: unknown class ", rec.class_id, " at line ", line_no);
        for (float v : {rec.cx, rec.cy, rec.w, rec.h})
            require(v >= 0.0f && v <= 1.0f, "label: coordinate ", v,
                    " outside [0,1] at line ", line_no);
        require(rec.w > 0.0f && rec.h > 0.0f,
                "label: non-positive box size at line ", line_no);
        labels.push_back(rec);
    }
    return labels;
}

std::string serialize_labels(const std::vector<LabelRecord>& labels) {
    std::string out;
    char line[96];
    for (const LabelRecord& r : labels) {
        std::snprintf(line, sizeof(line), "%d %.6f %.6f %.6f %.6f\n",
                      r.class_id, r.cx, r.cy, r.w, r.h);
        out += line;
    }
    return out;
}

std::vector<LabelRecord> load_labels(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open label file ", path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_label_file(ss.str());
    } catch (const Error& e) {
        fail(path, ": ", e.what());
    }
}

void save_labels(const std::string& path, const std::vector<LabelRecord>& labels) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "cannot open ", path, " for writing");
    out << serialize_labels(labels);
    require(out.good(), "write failed for ", path);
}

DatasetManifest discover_dataset(const std::string& dir) {
    require(fs::is_directory(dir), "dataset: ", dir, " is not a directory");
    std::vector<std::string> images;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".ppm")
            images.push_back(entry.path().string());
    std::sort(images.begin(), images.end());

    DatasetManifest m;
    for (const std::string& img : images) {
        fs::path label = fs::path(img);
        label.replace_extension(".txt");
        require(fs::exists(label), "dataset: image ", img,
                " has no label file ", label.string());
        m.entries.push_back({img, label.string(), ""});
    }
    return m;
}

DatasetManifest split_dataset(const DatasetManifest& manifest,
                              double test_ratio, uint64_t seed) {
    require(!manifest.entries.empty(), "split: empty manifest");
    require(test_ratio >= 0.0 && test_ratio < 1.0, "split: bad test ratio ",
            test_ratio);

    DatasetManifest out = manifest;
    Rng rng(seed);
    // Fisher-Yates over the entry list
    for (size_t i = out.entries.size() - 1; i > 0; --i)
        std::swap(out.entries[i], out.entries[rng.below(i + 1)]);

    const size_t n_test = size_t(std::floor(out.entries.size() * test_ratio));
    const size_t n_train = out.entries.size() - n_test;
    for (size_t i = 0; i < out.entries.size(); ++i)
        out.entries[i].split = i < n_train ? "train" : "test";
    return out;
}

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "cannot open ", path, " for writing");
    for (const ManifestEntry& e : manifest.entries)
        out << e.image_path << '\t' << e.label_path << '\t' << e.split << '\n';
    require(out.good(), "write failed for ", path);
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open manifest ", path);
    DatasetManifest m;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ManifestEntry e;
        std::istringstream ls(line);
        require(bool(std::getline(ls, e.image_path, '\t')) &&
                    bool(std::getline(ls, e.label_path, '\t')),
                path, ": malformed manifest line ", line_no);
        std::getline(ls, e.split, '\t');
        m.entries.push_back(std::move(e));
    }
    return m;
}

void emit_train_config(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "cannot open ", path, " for writing");
    out << "epochs=100\n"
           "optimizer=SGD\n"
           "batch=16\n"
           "lr=0.01\n"
           "momentum=0.937\n"
           "weight_decay=0.0005\n"
           "patience=20\n"
           "iou_t=0.01\n"
           "hsv_h=0.015\n"
           "hsv_s=0.7\n"
           "hsv_v=0.4\n";
    require(out.good(), "write failed for ", path);
}

std::map<std::string, std::string> parse_train_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open train config ", path);
    std::map<std::string, std::string> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const size_t eq = line.find('=');
        require(eq != std::string::npos, path, ": missing '=' at line ",
                line_no);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

} // namespace strawdet
