#include "noisegate/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "noisegate/errors.hpp"
#include "noisegate/random.hpp"

namespace noisegate {

const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        case Split::unassigned: break;
    }
    return "unassigned";
}

std::vector<std::size_t> Dataset::indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == s) out.push_back(i);
    return out;
}

void Dataset::validate() const {
    const auto n = size();
    if (num_classes < 1) throw std::invalid_argument("dataset: num_classes must be positive");
    if (features.rows() != n || observed_labels.size() != n || split.size() != n)
        throw std::invalid_argument("dataset: inconsistent row counts");
    if (!class_names.empty() && class_names.size() != static_cast<std::size_t>(num_classes))
        throw std::invalid_argument("dataset: class_names size does not match num_classes");
    for (std::size_t i = 0; i < n; ++i) {
        for (Label y : {true_labels[i], observed_labels[i]})
            if (y < 0 || y >= num_classes)
                throw std::invalid_argument("dataset: label out of range at row " + std::to_string(i));
        if (observed_labels[i] != true_labels[i] && split[i] != Split::train)
            throw std::invalid_argument("dataset: corrupted label outside train split at row " +
                                        std::to_string(i));
    }
    for (double v : features.values())
        if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature value");
}

Dataset make_blobs(const BlobsParams& p) {
    if (p.num_classes < 2) throw std::invalid_argument("make_blobs: need at least 2 classes");
    if (p.n_per_class < 1 || p.dim < 1)
        throw std::invalid_argument("make_blobs: n_per_class and dim must be positive");
    if (!std::isfinite(p.separation) || !std::isfinite(p.spread) || p.separation < 0 || p.spread <= 0)
        throw std::invalid_argument("make_blobs: separation must be >= 0 and spread > 0, both finite");

    const auto k = static_cast<std::size_t>(p.num_classes);
    Rng rng(p.seed);

    // Random center directions, rescaled so the closest pair sits exactly at
    // `separation`.
    Matrix centers(k, p.dim);
    double min_dist = 0.0;
    for (int attempt = 0; attempt < 100 && min_dist <= 0.0; ++attempt) {
        for (double& v : centers.values()) v = rng.normal();
        min_dist = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b) {
                double d2 = 0.0;
                for (std::size_t c = 0; c < p.dim; ++c) {
                    const double diff = centers(a, c) - centers(b, c);
                    d2 += diff * diff;
                }
                min_dist = std::min(min_dist, std::sqrt(d2));
            }
    }
    if (min_dist <= 0.0) throw std::invalid_argument("make_blobs: could not place distinct centers");
    const double scale = p.separation / min_dist;
    for (double& v : centers.values()) v *= scale;

    Dataset ds;
    const std::size_t n = k * p.n_per_class;
    ds.features = Matrix(n, p.dim);
    ds.true_labels.resize(n);
    ds.num_classes = p.num_classes;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < p.n_per_class; ++j) {
            const std::size_t i = c * p.n_per_class + j;
            ds.true_labels[i] = static_cast<Label>(c);
            auto row = ds.features.row(i);
            for (std::size_t f = 0; f < p.dim; ++f) row[f] = centers(c, f) + p.spread * rng.normal();
        }
    ds.observed_labels = ds.true_labels;
    ds.split.assign(n, Split::unassigned);
    return ds;
}

std::array<std::size_t, 3> allocate_counts(std::size_t n, SplitFractions fractions) {
    const std::array<double, 3> f{fractions.train, fractions.val, fractions.test};
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        const double exact = f[s] * static_cast<double>(n);
        counts[s] = static_cast<std::size_t>(std::floor(exact));
        remainder[s] = exact - static_cast<double>(counts[s]);
        assigned += counts[s];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < n; i = (i + 1) % 3) {
        if (f[order[i]] <= 0.0) continue;
        ++counts[order[i]];
        ++assigned;
    }
    return counts;
}

Dataset split(const Dataset& ds, SplitFractions fractions, std::uint64_t seed) {
    for (double f : {fractions.train, fractions.val, fractions.test})
        if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("split: fractions must lie in [0, 1]");
    if (std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9)
        throw std::invalid_argument("split: fractions must sum to 1");

    Dataset out = ds;
    Rng rng(seed);
    for (int c = 0; c < ds.num_classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.true_labels[i] == c) members.push_back(i);
        rng.shuffle(std::span<std::size_t>(members));
        const auto counts = allocate_counts(members.size(), fractions);
        std::size_t pos = 0;
        constexpr std::array<Split, 3> tags{Split::train, Split::val, Split::test};
        for (std::size_t s = 0; s < 3; ++s)
            for (std::size_t j = 0; j < counts[s]; ++j) out.split[members[pos++]] = tags[s];
    }
    return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".meta.json");
}

}  // namespace

Dataset load_features(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    const std::string name = path.string();
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw ParseError(name, line_no, "missing header");
    const auto header = split_fields(trim(line));
    if (header.size() < 2 || trim(header.back()) != "label")
        throw ParseError(name, line_no, "header must be f0,...,f{d-1},label");
    const std::size_t dim = header.size() - 1;

    std::vector<double> values;
    std::vector<Label> labels;
    while (std::getline(in, line)) {
        ++line_no;
        const auto row = trim(line);
        if (row.empty()) continue;
        const auto fields = split_fields(row);
        if (fields.size() != dim + 1)
            throw ParseError(name, line_no,
                             "expected " + std::to_string(dim + 1) + " columns, got " +
                                 std::to_string(fields.size()));
        for (std::size_t f = 0; f < dim; ++f) {
            const std::string text(trim(fields[f]));
            char* end = nullptr;
            const double v = std::strtod(text.c_str(), &end);
            if (text.empty() || end != text.c_str() + text.size())
                throw ParseError(name, line_no, "bad feature value '" + text + "'");
            if (!std::isfinite(v)) throw ParseError(name, line_no, "non-finite feature value");
            values.push_back(v);
        }
        const auto label_text = trim(fields.back());
        Label y = 0;
        const auto [ptr, ec] = std::from_chars(label_text.data(), label_text.data() + label_text.size(), y);
        if (ec != std::errc() || ptr != label_text.data() + label_text.size())
            throw ParseError(name, line_no, "bad label '" + std::string(label_text) + "'");
        if (y < 0) throw std::invalid_argument(name + ":" + std::to_string(line_no) + ": negative label");
        labels.push_back(y);
    }

    Dataset ds;
    const std::size_t n = labels.size();
    ds.features = Matrix(n, dim, std::move(values));
    ds.true_labels = labels;
    ds.observed_labels = std::move(labels);
    ds.split.assign(n, Split::unassigned);
    const Label max_label =
        ds.true_labels.empty() ? -1 : *std::max_element(ds.true_labels.begin(), ds.true_labels.end());
    ds.num_classes = max_label + 1;

    const auto meta_path = sidecar_path(path);
    if (std::filesystem::exists(meta_path)) {
        std::ifstream meta_in(meta_path);
        nlohmann::json meta;
        try {
            meta = nlohmann::json::parse(meta_in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(meta_path.string(), 1, e.what());
        }
        if (meta.contains("k")) ds.num_classes = meta.at("k").get<int>();
        if (meta.contains("class_names"))
            ds.class_names = meta.at("class_names").get<std::vector<std::string>>();
        if (max_label >= ds.num_classes)
            throw std::invalid_argument(name + ": label " + std::to_string(max_label) +
                                        " outside [0, k) with k=" + std::to_string(ds.num_classes));
    }
    ds.validate();
    return ds;
}

void save_features(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t f = 0; f < ds.dim(); ++f) out << 'f' << f << ',';
    out << "label\n";
    char buf[32];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.features.row(i)) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf << ',';
        }
        out << ds.true_labels[i] << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());

    nlohmann::json meta{{"k", ds.num_classes}};
    if (!ds.class_names.empty()) meta["class_names"] = ds.class_names;
    std::ofstream meta_out(sidecar_path(path));
    meta_out << meta.dump(2) << '\n';
    if (!meta_out) throw std::runtime_error("write failed: " + sidecar_path(path).string());
}

}  // namespace noisegate
