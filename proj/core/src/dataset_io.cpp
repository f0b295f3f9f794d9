#include "fwseg/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "fwseg/log.hpp"

namespace fwseg {

namespace {

cv::Mat read_u8(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("file not found: " + path.string());
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw DataError("cannot decode image: " + path.string());
    if (m.depth() != CV_8U) throw DataError("expected an 8-bit image: " + path.string());
    if (m.channels() == 3) {
        cv::cvtColor(m, m, cv::COLOR_BGR2GRAY);
    } else if (m.channels() == 4) {
        cv::cvtColor(m, m, cv::COLOR_BGRA2GRAY);
    } else if (m.channels() != 1) {
        throw DataError("unsupported channel count in " + path.string());
    }
    return m;
}

void write_u8(const fs::path& path, const cv::Mat& m) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), m)) throw DataError("cannot write image: " + path.string());
}

template <class T, class F>
cv::Mat to_mat(const Grid<T>& g, F&& encode) {
    cv::Mat m(g.height(), g.width(), CV_8UC1);
    for (int y = 0; y < g.height(); ++y) {
        auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < g.width(); ++x) row[x] = encode(g(y, x));
    }
    return m;
}

bool is_mask_name(const std::string& stem) {
    return stem.size() > 5 && stem.compare(stem.size() - 5, 5, "_mask") == 0;
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (directories ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

Image read_image_png(const fs::path& path) {
    cv::Mat m = read_u8(path);
    Image out(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) out(y, x) = static_cast<float>(row[x]) / 255.0f;
    }
    return out;
}

void write_image_png(const fs::path& path, const Image& image) {
    write_u8(path, to_mat(image, [](float v) {
                 return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
             }));
}

DenseMask read_mask_png(const fs::path& path) {
    cv::Mat m = read_u8(path);
    DenseMask out(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) {
            if (row[x] != 0 && row[x] != 255) {
                throw DataError("mask " + path.string() + " has value " + std::to_string(row[x]) +
                                " (expected 0 or 255)");
            }
            out(y, x) = row[x] == 255 ? 1 : 0;
        }
    }
    return out;
}

void write_mask_png(const fs::path& path, const DenseMask& mask) {
    write_u8(path, to_mat(mask, [](std::uint8_t v) -> std::uint8_t { return v ? 255 : 0; }));
}

WeakMask read_weak_png(const fs::path& path) {
    cv::Mat m = read_u8(path);
    WeakMask out(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) out(y, x) = decode_label(row[x]);
    }
    return out;
}

void write_weak_png(const fs::path& path, const WeakMask& weak) {
    write_u8(path, to_mat(weak, encode_label));
}

std::vector<SegTask> load_dataset_dir(const fs::path& root) {
    if (!fs::is_directory(root)) throw DataError("dataset root is not a directory: " + root.string());
    std::vector<SegTask> tasks;
    for (const auto& dataset_dir : sorted_entries(root, true)) {
        for (const auto& class_dir : sorted_entries(dataset_dir, true)) {
            SegTask task{dataset_dir.filename().string(), class_dir.filename().string(), {}};
            for (const auto& file : sorted_entries(class_dir, false)) {
                if (file.extension() != ".png" || is_mask_name(file.stem().string())) continue;
                const fs::path mask_path = class_dir / (file.stem().string() + "_mask.png");
                if (!fs::exists(mask_path)) throw DataError("missing mask for image " + file.string());
                Sample s{read_image_png(file), read_mask_png(mask_path)};
                require_same_shape(s.image, s.mask, file.string().c_str());
                task.samples.push_back(std::move(s));
            }
            if (!task.samples.empty()) tasks.push_back(std::move(task));
        }
    }
    if (tasks.empty()) warn("no tasks found under " + root.string());
    return tasks;
}

void write_dataset_dir(const fs::path& root, const std::vector<SegTask>& tasks) {
    for (const auto& task : tasks) {
        const fs::path dir = root / task.dataset_id / task.target_class;
        fs::create_directories(dir);
        for (std::size_t i = 0; i < task.samples.size(); ++i) {
            char stem[32];
            std::snprintf(stem, sizeof stem, "img%03zu", i);
            write_image_png(dir / (std::string(stem) + ".png"), task.samples[i].image);
            write_mask_png(dir / (std::string(stem) + "_mask.png"), task.samples[i].mask);
        }
    }
}

}  // namespace fwseg
