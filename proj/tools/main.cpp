// strawdet command-line tool: model accounting, detection, evaluation,
// augmentation, and benchmarking over the strawdet_core library.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <unistd.h>

#include "strawdet/augment.hpp"
#include "strawdet/dataset.hpp"
#include "strawdet/detect.hpp"
#include "strawdet/error.hpp"
#include "strawdet/metrics.hpp"
#include "strawdet/runtime.hpp"

namespace fs = std::filesystem;
using namespace strawdet;

namespace {

bool use_color() {
    return isatty(fileno(stdout)) && std::getenv("STRAW_NO_COLOR") == nullptr;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), "cannot open ", tmp.string(), " for writing");
        out << text;
        require(out.good(), "write failed for ", tmp.string());
    }
    fs::rename(tmp, path);
}

void write_image_atomic(const fs::path& path, const RasterImage& img) {
    const fs::path tmp = path.string() + ".tmp";
    write_image(tmp.string(), img);
    fs::rename(tmp, path);
}

// Letterboxed RGB image as a 1x3xHxW tensor in [0,1].
Tensor to_tensor(const RasterImage& img) {
    Tensor t(1, 3, img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const uint8_t* p = img.px(x, y);
            for (int c = 0; c < 3; ++c)
                t.at(0, c, y, x) = p[c] / 255.0f;
        }
    return t;
}

std::string arch_check(const std::string& name) {
    try {
        parse_arch(name);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

std::string size_check(const std::string& value) {
    const int v = std::atoi(value.c_str());
    if (v < 32 || v % 32 != 0) return "size must be a positive multiple of 32";
    return {};
}

// ---- model ---------------------------------------------------------------

struct ModelOpts {
    std::string arch = "yolov5s-straw";
    int classes = 3;
    int size = 640;
    uint64_t seed = 0;
    std::string out;
};

int run_model_info(const ModelOpts& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelGraph g = build_model(parse_arch(o.arch), o.classes);
    const bool color = use_color();
    std::printf("%sarch %s  classes %d  input %d%s\n", color ? "\033[1m" : "",
                o.arch.c_str(), o.classes, o.size, color ? "\033[0m" : "");
    std::fputs(describe_model(g, o.size).c_str(), stdout);
    std::printf("blocks: %zu  conv-ops: %d\n", g.layers.size(),
                conv_op_count(g));
    std::printf("parameters: %lld\n",
                static_cast<long long>(count_params(g)));
    std::printf("gflops: %.2f\n", count_flops(g, o.size));
    const auto t1 = std::chrono::steady_clock::now();
    std::printf("elapsed-ms: %.1f\n",
                std::chrono::duration<double, std::milli>(t1 - t0).count());
    return 0;
}

int run_model_init(const ModelOpts& o) {
    const ModelGraph g = build_model(parse_arch(o.arch), o.classes);
    const WeightStore store = init_weights(g, o.seed);
    save_weights(store, o.out);
    std::printf("wrote %s (%zu tensors, %lld parameters)\n", o.out.c_str(),
                store.size(), static_cast<long long>(count_params(g)));
    return 0;
}

// ---- detect ----------------------------------------------------------------

struct DetectOpts {
    std::string arch = "yolov5s-straw";
    int classes = 3;
    std::string weights;
    std::vector<std::string> inputs;
    std::string out;
    double conf = 0.25;
    double nms_iou = 0.45;
    int size = 640;
    int jobs = 1;
    bool render_out = false;
};

std::vector<std::string> collect_images(const std::vector<std::string>& inputs) {
    std::vector<std::string> images;
    for (const std::string& in : inputs) {
        if (fs::is_directory(in)) {
            for (const auto& e : fs::directory_iterator(in))
                if (e.is_regular_file() && e.path().extension() == ".ppm")
                    images.push_back(e.path().string());
        } else {
            require(fs::exists(in), "no such image: ", in);
            images.push_back(in);
        }
    }
    std::sort(images.begin(), images.end());
    return images;
}

int run_detect(const DetectOpts& o) {
    const ModelGraph graph = build_model(parse_arch(o.arch), o.classes);
    const Runtime runtime(graph, load_weights(o.weights));
    const AnchorSet anchors = AnchorSet::defaults();

    const std::vector<std::string> images = collect_images(o.inputs);
    require(!images.empty(), "detect: no input images");
    fs::create_directories(o.out);

    std::atomic<size_t> next{0};
    std::mutex err_mutex;
    std::string first_error;

    auto worker = [&]() {
        size_t i;
        while ((i = next.fetch_add(1)) < images.size()) {
            try {
                const RasterImage img = read_image(images[i]);
                auto [boxed, transform] = letterbox(img, o.size);
                const HeadOutputs heads = runtime.forward(to_tensor(boxed));
                std::vector<Detection> dets =
                    decode(heads, anchors, float(o.conf), o.classes);
                dets = nms(std::move(dets), float(o.nms_iou));
                for (Detection& d : dets) d = unletterbox(d, transform);

                const std::string stem = fs::path(images[i]).stem().string();
                write_text_atomic(fs::path(o.out) / (stem + ".txt"),
                                  format_detections(dets));
                if (o.render_out)
                    write_image_atomic(fs::path(o.out) / (stem + "_det.ppm"),
                                       render(img, dets));
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (first_error.empty())
                    first_error = images[i] + ": " + e.what();
            }
        }
    };

    std::vector<std::thread> pool;
    const int jobs = std::max(1, std::min<int>(o.jobs, int(images.size())));
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    if (!first_error.empty()) fail(first_error);
    std::printf("detected over %zu image(s) -> %s\n", images.size(),
                o.out.c_str());
    return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalOpts {
    std::string pred_dir;
    std::string gt_dir;
    std::string out = ".";
    double eval_iou = 0.5;
    int classes = 3;
};

std::set<std::string> txt_stems(const std::string& dir) {
    require(fs::is_directory(dir), dir, " is not a directory");
    std::set<std::string> stems;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".txt")
            stems.insert(e.path().stem().string());
    return stems;
}

int run_eval(const EvalOpts& o) {
    const std::set<std::string> preds = txt_stems(o.pred_dir);
    const std::set<std::string> gts = txt_stems(o.gt_dir);

    std::vector<std::string> stems;
    for (const std::string& s : preds) {
        if (gts.count(s)) {
            stems.push_back(s);
        } else {
            std::fprintf(stderr, "warning: %s has no ground truth, skipped\n",
                         s.c_str());
        }
    }
    for (const std::string& s : gts)
        if (!preds.count(s))
            std::fprintf(stderr, "warning: %s has no predictions, skipped\n",
                         s.c_str());
    if (stems.empty()) {
        std::fprintf(stderr, "error: no matching file stems between %s and %s\n",
                     o.pred_dir.c_str(), o.gt_dir.c_str());
        return 2;
    }

    std::vector<std::vector<ScoredBox>> dets_per_image;
    std::vector<std::vector<GtBox>> gts_per_image;
    for (const std::string& stem : stems) {
        std::ifstream pin(fs::path(o.pred_dir) / (stem + ".txt"));
        std::ostringstream pss;
        pss << pin.rdbuf();
        std::vector<Detection> dets = parse_detections(pss.str());
        for (const Detection& d : dets)
            require(d.class_id >= 0 && d.class_id < o.classes, stem,
                    ": prediction class ", d.class_id, " outside [0,",
                    o.classes, ")");

        // Predictions from `detect` are in original-image pixels; when the
        // ground-truth directory carries the image, normalize against it so
        // both sides share the label frame.
        const fs::path img_path = fs::path(o.gt_dir) / (stem + ".ppm");
        if (fs::exists(img_path)) {
            const RasterImage img = read_image(img_path.string());
            for (Detection& d : dets) {
                d.cx /= img.width;
                d.w /= img.width;
                d.cy /= img.height;
                d.h /= img.height;
            }
        }

        std::vector<ScoredBox> sboxes;
        for (const Detection& d : dets)
            sboxes.push_back({to_box(d), d.class_id, d.score});
        dets_per_image.push_back(std::move(sboxes));

        std::vector<GtBox> gt;
        for (const LabelRecord& r :
             load_labels((fs::path(o.gt_dir) / (stem + ".txt")).string()))
            gt.push_back({r.class_id, {r.cx, r.cy, r.w, r.h}, false});
        gts_per_image.push_back(std::move(gt));
    }

    const EvalReport report = evaluate(dets_per_image, gts_per_image,
                                       o.classes, float(o.eval_iou));
    for (const ClassEval& ce : report.classes)
        if (!ce.ap.has_value())
            std::fprintf(stderr,
                         "warning: class %d has no ground truth; AP "
                         "undefined, excluded from mAP\n",
                         ce.class_id);
    std::fputs(report_text(report, use_color()).c_str(), stdout);
    fs::create_directories(o.out);
    write_text_atomic(fs::path(o.out) / "eval_report.txt",
                      report_text(report, false));
    write_text_atomic(fs::path(o.out) / "eval_report.csv", report_csv(report));
    return 0;
}

// ---- augment ---------------------------------------------------------------

struct AugmentOpts {
    std::string in_dir;
    std::string out_dir;
    std::vector<std::string> ops = {"b+20", "b+40", "b-20",
                                    "b-40", "saltpepper", "gauss"};
    uint64_t seed = 0;
    int mosaic_size = 640;
};

struct AugOp {
    std::string name;
    std::string suffix;
};

AugOp resolve_op(const std::string& name) {
    if (name == "b+20" || name == "b+40" || name == "b-20" || name == "b-40")
        return {name, "_" + name};
    if (name == "saltpepper") return {name, "_sp"};
    if (name == "gauss") return {name, "_gauss"};
    if (name == "hsv") return {name, "_hsv"};
    if (name == "mosaic") return {name, "_mosaic"};
    fail("unknown augment op '", name,
         "' (expected b+20,b+40,b-20,b-40,saltpepper,gauss,hsv,mosaic)");
}

RasterImage apply_photometric(const std::string& op, const RasterImage& img,
                              Rng& rng) {
    if (op == "b+20") return adjust_brightness(img, 20);
    if (op == "b+40") return adjust_brightness(img, 40);
    if (op == "b-20") return adjust_brightness(img, -20);
    if (op == "b-40") return adjust_brightness(img, -40);
    if (op == "saltpepper") return salt_pepper(img, 0.02, rng);
    if (op == "gauss") return gaussian_noise(img, 0.02, rng);
    if (op == "hsv") return hsv_jitter(img, HsvGains{}, rng);
    fail("unknown augment op '", op, "'");
}

int run_augment(const AugmentOpts& o) {
    std::vector<AugOp> photometric;
    bool want_mosaic = false;
    for (const std::string& name : o.ops) {
        if (name.empty()) continue;  // --ops "" means copy-through
        const AugOp op = resolve_op(name);
        if (op.name == "mosaic") {
            want_mosaic = true;
        } else {
            photometric.push_back(op);
        }
    }

    require(fs::is_directory(o.in_dir), o.in_dir, " is not a directory");
    std::vector<std::string> images;
    for (const auto& e : fs::directory_iterator(o.in_dir))
        if (e.is_regular_file() && e.path().extension() == ".ppm")
            images.push_back(e.path().string());
    std::sort(images.begin(), images.end());
    require(!images.empty(), "augment: no .ppm images in ", o.in_dir);
    fs::create_directories(o.out_dir);

    auto load_one = [](const std::string& path, bool* has_labels) {
        LabeledImage li;
        li.image = read_image(path);
        fs::path label = fs::path(path);
        label.replace_extension(".txt");
        const bool labeled = fs::exists(label);
        if (labeled) li.labels = load_labels(label.string());
        if (has_labels) *has_labels = labeled;
        return li;
    };

    size_t written = 0;
    auto emit = [&](const std::string& stem, const RasterImage& img,
                    const std::vector<LabelRecord>& labels, bool with_labels) {
        write_image_atomic(fs::path(o.out_dir) / (stem + ".ppm"), img);
        if (with_labels)
            write_text_atomic(fs::path(o.out_dir) / (stem + ".txt"),
                              serialize_labels(labels));
        ++written;
    };

    for (const std::string& path : images) {
        const std::string stem = fs::path(path).stem().string();
        bool has_labels = false;
        const LabeledImage li = load_one(path, &has_labels);
        emit(stem, li.image, li.labels, has_labels);
        for (const AugOp& op : photometric) {
            // Seed per (file, op) so output is independent of processing order.
            const std::string key = stem + "|" + op.name;
            Rng rng(mix_seed(o.seed, hash64(key.data(), key.size())));
            emit(stem + op.suffix, apply_photometric(op.name, li.image, rng),
                 li.labels, has_labels);
        }
    }

    if (want_mosaic) {
        for (size_t g = 0; g + 4 <= images.size(); g += 4) {
            std::vector<LabeledImage> group;
            for (size_t j = 0; j < 4; ++j)
                group.push_back(load_one(images[g + j], nullptr));
            const std::string stem = fs::path(images[g]).stem().string();
            const std::string key = "mosaic|" + stem;
            Rng rng(mix_seed(o.seed, hash64(key.data(), key.size())));
            const LabeledImage m = mosaic(group, o.mosaic_size, rng);
            emit(stem + "_mosaic", m.image, m.labels, true);
        }
    }

    std::printf("augmented %zu image(s) -> %zu output(s) in %s\n",
                images.size(), written, o.out_dir.c_str());
    return 0;
}

// ---- bench -----------------------------------------------------------------

struct BenchOpts {
    std::string arch = "yolov5s-straw";
    int classes = 3;
    std::string weights;
    uint64_t seed = 0;
    int iters = 10;
    int size = 640;
    double conf = 0.25;
    double nms_iou = 0.45;
};

int run_bench(const BenchOpts& o) {
    const ModelGraph graph = build_model(parse_arch(o.arch), o.classes);
    const WeightStore store = o.weights.empty() ? init_weights(graph, o.seed)
                                                : load_weights(o.weights);
    const Runtime runtime(graph, store);
    const AnchorSet anchors = AnchorSet::defaults();

    Rng rng(o.seed);
    RasterImage img(o.size, o.size);
    for (uint8_t& p : img.pixels) p = uint8_t(rng.below(256));
    const Tensor input = to_tensor(img);

    std::vector<double> ms;
    size_t boxes = 0;
    for (int i = 0; i < o.iters; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const HeadOutputs heads = runtime.forward(input);
        const auto dets = nms(decode(heads, anchors, float(o.conf), o.classes),
                              float(o.nms_iou));
        const auto t1 = std::chrono::steady_clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        boxes = dets.size();
    }
    std::sort(ms.begin(), ms.end());
    double mean = 0;
    for (double v : ms) mean += v;
    mean /= ms.size();
    const double median = ms[ms.size() / 2];
    const double p95 = ms[size_t(std::ceil(0.95 * ms.size())) - 1];
    std::printf("%s @%d, %d iteration(s), %zu box(es)\n", o.arch.c_str(),
                o.size, o.iters, boxes);
    std::printf("latency-ms mean %.2f median %.2f p95 %.2f\n", mean, median,
                p95);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"strawdet: three-maturity strawberry detection toolkit"};
    app.require_subcommand(1);

    ModelOpts mo;
    CLI::App* model = app.add_subcommand("model", "model accounting and weights");
    model->require_subcommand(1);
    CLI::App* info = model->add_subcommand("info", "layer table, parameters, GFLOPs");
    info->add_option("--arch", mo.arch, "architecture id")
        ->check(CLI::Validator(arch_check, "ARCH"));
    info->add_option("--classes", mo.classes, "class count")->check(CLI::PositiveNumber);
    info->add_option("--size", mo.size, "input size")->check(CLI::Validator(size_check, "SIZE"));
    CLI::App* init = model->add_subcommand("init", "write seeded weights");
    init->add_option("--arch", mo.arch, "architecture id")
        ->check(CLI::Validator(arch_check, "ARCH"));
    init->add_option("--classes", mo.classes, "class count")->check(CLI::PositiveNumber);
    init->add_option("--seed", mo.seed, "rng seed");
    init->add_option("--out", mo.out, "output weight file")->required();

    DetectOpts dopts;
    CLI::App* detect = app.add_subcommand("detect", "run detection over images");
    detect->add_option("--arch", dopts.arch, "architecture id")
        ->check(CLI::Validator(arch_check, "ARCH"));
    detect->add_option("--classes", dopts.classes, "class count")->check(CLI::PositiveNumber);
    detect->add_option("--weights", dopts.weights, "weight file")->required();
    detect->add_option("images", dopts.inputs, "image files or directories")
        ->required();
    detect->add_option("--out", dopts.out, "output directory")->required();
    detect->add_option("--conf", dopts.conf, "confidence threshold")
        ->check(CLI::Range(0.0, 1.0));
    detect->add_option("--nms-iou", dopts.nms_iou, "NMS IoU threshold")
        ->check(CLI::Range(0.0, 1.0));
    detect->add_option("--size", dopts.size, "letterbox target size")
        ->check(CLI::Validator(size_check, "SIZE"));
    detect->add_option("--jobs", dopts.jobs, "worker threads")
        ->check(CLI::Range(1, 64));
    detect->add_flag("--render", dopts.render_out, "write annotated images");

    EvalOpts eo;
    CLI::App* eval = app.add_subcommand("eval", "evaluate predictions against ground truth");
    eval->add_option("pred_dir", eo.pred_dir, "directory of prediction .txt files")
        ->required();
    eval->add_option("gt_dir", eo.gt_dir, "directory of ground-truth .txt files")
        ->required();
    eval->add_option("--eval-iou", eo.eval_iou, "matching IoU threshold")
        ->check(CLI::Range(0.0, 1.0));
    eval->add_option("--classes", eo.classes, "class count")->check(CLI::PositiveNumber);
    eval->add_option("--out", eo.out, "report output directory");

    AugmentOpts ao;
    CLI::App* augment = app.add_subcommand("augment", "write an augmented corpus");
    augment->add_option("in_dir", ao.in_dir, "input directory")->required();
    augment->add_option("out_dir", ao.out_dir, "output directory")->required();
    augment->add_option("--ops", ao.ops,
                        "ops from b+20,b+40,b-20,b-40,saltpepper,gauss,hsv,mosaic")
        ->delimiter(',');
    augment->add_option("--seed", ao.seed, "rng seed");

    BenchOpts bo;
    CLI::App* bench = app.add_subcommand("bench", "forward+decode+NMS latency");
    bench->add_option("--arch", bo.arch, "architecture id")
        ->check(CLI::Validator(arch_check, "ARCH"));
    bench->add_option("--classes", bo.classes, "class count")->check(CLI::PositiveNumber);
    bench->add_option("--weights", bo.weights, "weight file (seeded init when absent)");
    bench->add_option("--seed", bo.seed, "rng seed");
    bench->add_option("--iters", bo.iters, "iterations")->check(CLI::PositiveNumber);
    bench->add_option("--size", bo.size, "input size")->check(CLI::Validator(size_check, "SIZE"));

    std::string cfg_out;
    CLI::App* cfg = app.add_subcommand("emit-train-config",
                                       "write the training hyperparameter file");
    cfg->add_option("--out", cfg_out, "output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // usage errors exit 2, --help exits 0
    }

    try {
        if (info->parsed()) return run_model_info(mo);
        if (init->parsed()) return run_model_init(mo);
        if (detect->parsed()) return run_detect(dopts);
        if (eval->parsed()) return run_eval(eo);
        if (augment->parsed()) return run_augment(ao);
        if (bench->parsed()) return run_bench(bo);
        if (cfg->parsed()) {
            emit_train_config(cfg_out);
            std::printf("wrote %s\n", cfg_out.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
