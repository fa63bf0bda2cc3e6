#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace strawdet {

// Normalized YOLO label: "<class> <cx> <cy> <w> <h>" per line, all in [0,1].
struct LabelRecord {
    int class_id = 0;
    float cx = 0, cy = 0, w = 0, h = 0;
};

inline constexpr int kNumMaturityClasses = 3;
// Class ids follow the maturity listing order: 0 immature, 1 nearly mature,
// 2 mature.
const std::string& maturity_name(int class_id);
int maturity_id(const std::string& name);

std::vector<LabelRecord> parse_label_file(const std::string& text);
std::string serialize_labels(const std::vector<LabelRecord>& labels);

std::vector<LabelRecord> load_labels(const std::string& path);
void save_labels(const std::string& path, const std::vector<LabelRecord>& labels);

struct ManifestEntry {
    std::string image_path;
    std::string label_path;
    std::string split;  // "train", "test", or "" before splitting
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
};

// Pairs every .ppm with its same-stem .txt label file (which must exist,
// possibly empty). Discovery order is lexicographic by path.
DatasetManifest discover_dataset(const std::string& dir);

// Deterministic shuffle by seed, then the first (1 - test_ratio) share goes
// to train; the test share is floor(N * test_ratio), so sizes differ from
// the exact ratio by less than one item.
DatasetManifest split_dataset(const DatasetManifest& manifest,
                              double test_ratio, uint64_t seed);

// One "image<TAB>label<TAB>split" line per entry.
void save_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::string& path);

// Training hyperparameters as a key=value file for external trainers.
void emit_train_config(const std::string& path);
std::map<std::string, std::string> parse_train_config(const std::string& path);

} // namespace strawdet
