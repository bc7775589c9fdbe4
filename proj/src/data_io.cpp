#include "asnet/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace fs = std::filesystem;

namespace asnet {

// ---- images ---------------------------------------------------------------

Image read_image(const fs::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw std::runtime_error("cannot decode image " + path.string());
    Image img(bgr.rows, bgr.cols);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = row[x][2 - c] / 255.0f;
        }
    }
    return img;
}

void write_image(const fs::path& path, const Image& img) {
    cv::Mat bgr(img.height, img.width, CV_8UC3);
    for (int y = 0; y < img.height; ++y) {
        auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const float v = std::clamp(img.at(c, y, x), 0.0f, 1.0f);
                row[x][2 - c] = static_cast<unsigned char>(std::lround(v * 255.0f));
            }
        }
    }
    if (!cv::imwrite(path.string(), bgr)) throw std::runtime_error("cannot write image " + path.string());
}

void write_gray(const fs::path& path, const Field2D& map) {
    cv::Mat g(map.height(), map.width(), CV_8UC1);
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            g.at<unsigned char>(y, x) =
                static_cast<unsigned char>(std::lround(std::clamp(map.at(y, x), 0.0, 1.0) * 255.0));
        }
    }
    if (!cv::imwrite(path.string(), g)) throw std::runtime_error("cannot write image " + path.string());
}

BinaryMap read_roi(const fs::path& path) {
    cv::Mat g = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (g.empty()) throw std::runtime_error("cannot decode ROI mask " + path.string());
    BinaryMap roi(g.rows, g.cols);
    for (int y = 0; y < g.rows; ++y)
        for (int x = 0; x < g.cols; ++x) roi.at(y, x) = g.at<unsigned char>(y, x) ? 1 : 0;
    return roi;
}

// ---- datasets -------------------------------------------------------------

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

}  // namespace

Dataset Dataset::open(const fs::path& root, const std::string& split, bool require_annotations) {
    const fs::path base = split.empty() ? root : root / split;
    Dataset ds;
    const fs::path images = base / "images";
    const fs::path annotations = base / "annotations";
    if (fs::is_directory(images)) {
        for (const auto& e : fs::directory_iterator(images)) {
            if (!e.is_regular_file() || !is_image_file(e.path())) continue;
            Entry entry{e.path().stem().string(), e.path(), std::nullopt};
            const fs::path ann = annotations / (entry.stem + ".json");
            if (fs::exists(ann)) {
                entry.annotation = ann;
            } else if (require_annotations) {
                throw std::runtime_error("missing annotation for source image '" + entry.stem + "'");
            }
            ds.entries_.push_back(std::move(entry));
        }
    }
    std::sort(ds.entries_.begin(), ds.entries_.end(),
              [](const Entry& a, const Entry& b) { return a.image.filename() < b.image.filename(); });
    if (fs::exists(base / "roi.png")) ds.roi_ = read_roi(base / "roi.png");
    return ds;
}

Dataset Dataset::from_samples(std::vector<Sample> samples) {
    Dataset ds;
    ds.memory_ = std::move(samples);
    ds.in_memory_ = true;
    return ds;
}

std::size_t Dataset::size() const { return in_memory_ ? memory_.size() : entries_.size(); }

std::string Dataset::stem(std::size_t i) const {
    return in_memory_ ? memory_.at(i).stem : entries_.at(i).stem;
}

Sample Dataset::get(std::size_t i) const {
    if (in_memory_) return memory_.at(i);
    const Entry& e = entries_.at(i);
    Sample s;
    s.stem = e.stem;
    s.image = read_image(e.image);
    if (e.annotation) {
        s.annotation = read_annotation(e.annotation->string());
        if (s.annotation->height != s.image.height || s.annotation->width != s.image.width) {
            throw std::runtime_error("annotation size " + std::to_string(s.annotation->height) + "x" +
                                     std::to_string(s.annotation->width) + " does not match image '" +
                                     e.stem + "' (" + std::to_string(s.image.height) + "x" +
                                     std::to_string(s.image.width) + ")");
        }
        validate_annotation(*s.annotation);
    }
    if (roi_) {
        if (roi_->height != s.image.height || roi_->width != s.image.width) {
            throw std::runtime_error("ROI mask does not match image '" + e.stem + "'");
        }
        s.roi = roi_;
    }
    return s;
}

void save_samples(const fs::path& dir, const std::vector<Sample>& samples) {
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "annotations");
    for (const Sample& s : samples) {
        write_image(dir / "images" / (s.stem + ".png"), s.image);
        if (s.annotation) write_annotation((dir / "annotations" / (s.stem + ".json")).string(), *s.annotation);
    }
}

// ---- synthetic data -------------------------------------------------------

std::string to_string(Domain d) { return d == Domain::source ? "source" : "target"; }

Domain parse_domain(const std::string& name) {
    if (name == "source") return Domain::source;
    if (name == "target") return Domain::target;
    throw std::invalid_argument("unknown domain '" + name + "'");
}

void SynthSpec::validate() const {
    if (height < 1 || width < 1) throw std::invalid_argument("SynthSpec: image size must be positive");
    if (min_count < 0 || max_count < min_count) throw std::invalid_argument("SynthSpec: bad count range");
    if (!(min_radius > 0.0f) || max_radius < min_radius) throw std::invalid_argument("SynthSpec: bad radius range");
}

namespace {

constexpr float kObjectColor[3] = {0.95f, 0.45f, 0.15f};
constexpr float kClutterColor[3] = {0.55f, 0.75f, 0.95f};
constexpr float kRimWidth = 0.8f;

struct Disc {
    float x, y, r;
};

float disc_alpha(const Disc& d, int px, int py) {
    const float dist = std::hypot(px + 0.5f - d.x, py + 0.5f - d.y);
    if (dist <= d.r) return 1.0f;
    const float t = (dist - d.r) / kRimWidth;
    return std::exp(-0.5f * t * t);
}

void composite(Image& img, const std::vector<Disc>& discs, const float color[3]) {
    for (const Disc& d : discs) {
        const int reach = static_cast<int>(std::ceil(d.r + 4.0f * kRimWidth));
        const int y0 = std::max(0, static_cast<int>(d.y) - reach);
        const int y1 = std::min(img.height - 1, static_cast<int>(d.y) + reach);
        const int x0 = std::max(0, static_cast<int>(d.x) - reach);
        const int x1 = std::min(img.width - 1, static_cast<int>(d.x) + reach);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const float a = disc_alpha(d, x, y);
                for (int c = 0; c < 3; ++c) img.at(c, y, x) = a * color[c] + (1.0f - a) * img.at(c, y, x);
            }
        }
    }
}

}  // namespace

std::vector<Sample> synth_samples(const SynthSpec& spec, int n_images, Domain domain) {
    spec.validate();
    if (n_images < 0) throw std::invalid_argument("synth: n_images must be >= 0");
    const DomainStyle& style = domain == Domain::source ? spec.source : spec.target;
    std::vector<Sample> out;
    out.reserve(n_images);
    for (int i = 0; i < n_images; ++i) {
        std::seed_seq layout_seed{spec.seed, static_cast<std::uint64_t>(i), std::uint64_t{0x4c41594f}};
        std::seed_seq bg_seed{spec.seed, static_cast<std::uint64_t>(i),
                              static_cast<std::uint64_t>(domain == Domain::source ? 1 : 2)};
        std::mt19937_64 layout(layout_seed);
        std::mt19937_64 bg(bg_seed);

        std::uniform_int_distribution<int> count_dist(spec.min_count, spec.max_count);
        std::uniform_real_distribution<float> ux(0.0f, static_cast<float>(spec.width));
        std::uniform_real_distribution<float> uy(0.0f, static_cast<float>(spec.height));
        std::uniform_real_distribution<float> ur(spec.min_radius, spec.max_radius);

        const int count = count_dist(layout);
        std::vector<Disc> objects;
        PointAnnotation ann;
        ann.height = spec.height;
        ann.width = spec.width;
        for (int k = 0; k < count; ++k) {
            Disc d{ux(layout), uy(layout), ur(layout)};
            d.x = std::min(d.x, std::nextafter(static_cast<float>(spec.width), 0.0f));
            d.y = std::min(d.y, std::nextafter(static_cast<float>(spec.height), 0.0f));
            objects.push_back(d);
            ann.points.push_back({d.x, d.y});
        }

        Image img(spec.height, spec.width);
        std::uniform_real_distribution<float> angle(0.0f, std::numbers::pi_v<float>);
        std::uniform_real_distribution<float> phase(0.0f, 2.0f * std::numbers::pi_v<float>);
        std::normal_distribution<float> noise(0.0f, 1.0f);
        const float theta = angle(bg);
        const float phi = phase(bg);
        const float kx = std::cos(theta) * style.texture_freq * 2.0f * std::numbers::pi_v<float>;
        const float ky = std::sin(theta) * style.texture_freq * 2.0f * std::numbers::pi_v<float>;
        for (int y = 0; y < spec.height; ++y) {
            for (int x = 0; x < spec.width; ++x) {
                const float base = style.brightness + style.texture_amp * std::sin(kx * x + ky * y + phi);
                for (int c = 0; c < 3; ++c) img.at(c, y, x) = base + style.noise * noise(bg);
            }
        }
        std::vector<Disc> clutter;
        for (int k = 0; k < style.clutter; ++k) clutter.push_back({ux(bg), uy(bg), ur(bg)});
        composite(img, clutter, kClutterColor);
        composite(img, objects, kObjectColor);
        for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);

        Sample s;
        s.stem = to_string(domain) + "_" + std::to_string(100000 + i).substr(1);
        s.image = std::move(img);
        s.annotation = std::move(ann);
        out.push_back(std::move(s));
    }
    return out;
}

void synth_dataset(const SynthSpec& spec, int n_images, Domain domain, const fs::path& dir) {
    save_samples(dir, synth_samples(spec, n_images, domain));
}

// ---- preprocessing --------------------------------------------------------

PointAnnotation flip_horizontal(const PointAnnotation& ann) {
    PointAnnotation out = ann;
    for (Point& p : out.points) {
        const double col = std::floor(p.x);
        p.x = (ann.width - 1 - col) + (p.x - col);
    }
    return out;
}

Image flip_horizontal(const Image& img) {
    Image out(img.height, img.width);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
    return out;
}

Image resize_image(const Image& img, int height, int width) {
    if (height < 1 || width < 1 || img.height < 1 || img.width < 1) {
        throw std::invalid_argument("resize: degenerate image size");
    }
    if (height == img.height && width == img.width) return img;
    Image out(height, width);
    for (int c = 0; c < 3; ++c) {
        cv::Mat src(img.height, img.width, CV_32FC1,
                    const_cast<float*>(img.data.data()) + static_cast<std::size_t>(c) * img.height * img.width);
        cv::Mat dst(height, width, CV_32FC1, out.data.data() + static_cast<std::size_t>(c) * height * width);
        cv::resize(src, dst, dst.size(), 0, 0, cv::INTER_LINEAR);
    }
    return out;
}

TrainingPair preprocess(const Sample& sample, const PreprocessOptions& opt, std::mt19937_64* rng) {
    if (opt.input_size < 1 || opt.stride < 1 || opt.input_size % opt.stride != 0) {
        throw std::invalid_argument("preprocess: input_size must be a positive multiple of the stride");
    }
    if (!sample.annotation) throw std::invalid_argument("preprocess: sample '" + sample.stem + "' has no annotation");
    const int n = opt.input_size;
    Image img = resize_image(sample.image, n, n);

    PointAnnotation pts;
    pts.height = n;
    pts.width = n;
    const double sx = static_cast<double>(n) / sample.annotation->width;
    const double sy = static_cast<double>(n) / sample.annotation->height;
    const double limit = std::nextafter(static_cast<double>(n), 0.0);
    for (const Point& p : sample.annotation->points) {
        pts.points.push_back({std::min(p.x * sx, limit), std::min(p.y * sy, limit)});
    }

    if (opt.random_flip && rng != nullptr && std::bernoulli_distribution(0.5)(*rng)) {
        img = flip_horizontal(img);
        pts = flip_horizontal(pts);
    }

    TrainingPair out;
    out.image = image_tensor<float>(img);
    out.target = downsample_count_preserving(points_to_density(pts, opt.kernel), opt.stride);
    out.points = std::move(pts);
    return out;
}

template <typename T>
Tensor<T> image_tensor(const Image& img) {
    Tensor<T> t(1, 3, img.height, img.width);
    std::transform(img.data.begin(), img.data.end(), t.data(), [](float v) { return static_cast<T>(v); });
    return t;
}

template Tensor<float> image_tensor(const Image&);
template Tensor<double> image_tensor(const Image&);

// ---- density binary format ------------------------------------------------

namespace {

constexpr char kMagic[4] = {'A', 'S', 'D', 'M'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

std::vector<std::uint8_t> encode_density(const DensityMap& map) {
    std::vector<std::uint8_t> out;
    out.reserve(kDensityHeaderBytes + map.size() * 4);
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(kVersion);
    out.insert(out.end(), 3, 0);
    put_u32(out, static_cast<std::uint32_t>(map.height()));
    put_u32(out, static_cast<std::uint32_t>(map.width()));
    for (double v : map.values()) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
    }
    return out;
}

DensityMap decode_density(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw DensityFormatError(DensityFormatErrc::bad_magic, "density file: bad magic");
    }
    if (bytes.size() < kDensityHeaderBytes) {
        throw DensityFormatError(DensityFormatErrc::truncated, "density file: truncated header");
    }
    if (bytes[4] != kVersion) {
        throw DensityFormatError(DensityFormatErrc::bad_version,
                                 "density file: unsupported version " + std::to_string(bytes[4]));
    }
    const std::uint32_t h = get_u32(bytes.data() + 8);
    const std::uint32_t w = get_u32(bytes.data() + 12);
    const std::uint64_t expected = kDensityHeaderBytes + static_cast<std::uint64_t>(h) * w * 4;
    if (bytes.size() < expected) {
        throw DensityFormatError(DensityFormatErrc::truncated,
                                 "density file: payload truncated (" + std::to_string(bytes.size()) +
                                     " of " + std::to_string(expected) + " bytes)");
    }
    if (bytes.size() > expected) {
        throw DensityFormatError(DensityFormatErrc::trailing_bytes, "density file: trailing bytes after payload");
    }
    DensityMap map(static_cast<int>(h), static_cast<int>(w));
    const std::uint8_t* p = bytes.data() + kDensityHeaderBytes;
    for (std::size_t i = 0; i < map.size(); ++i, p += 4) {
        const std::uint32_t bits = get_u32(p);
        float f;
        std::memcpy(&f, &bits, 4);
        map.values()[i] = f;
    }
    return map;
}

void write_density(const fs::path& path, const DensityMap& map) {
    const auto bytes = encode_density(map);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

DensityMap read_density(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_density(bytes);
}

}  // namespace asnet
