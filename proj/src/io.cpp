#include "treekit/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string_view>
#include <system_error>
#include <vector>

#include "treekit/errors.hpp"

namespace treekit {

namespace {

constexpr std::string_view kPtcMagic = "#PTC 1";
constexpr std::string_view kPtcFields = "#fields x y z semantic instance";
constexpr std::string_view kPrdMagic = "#PRD 1";

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Shortest round-trip decimal form.
std::string fmt_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string_view> split_char(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view tok, const std::string& path, size_t line) {
    double v;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError(path, line, "bad number '" + std::string(tok) + "'");
    }
    if (!std::isfinite(v)) {
        throw ParseError(path, line, "non-finite coordinate '" + std::string(tok) + "'");
    }
    return v;
}

uint64_t parse_uint(std::string_view tok, const std::string& path, size_t line) {
    uint64_t v;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError(path, line, "bad integer '" + std::string(tok) + "'");
    }
    return v;
}

PointRecord parse_point(const std::vector<std::string_view>& tok, const std::string& path,
                        size_t line) {
    if (tok.size() != 5) {
        throw ParseError(path, line,
                         "expected 5 fields, got " + std::to_string(tok.size()));
    }
    PointRecord p;
    p.x = parse_double(tok[0], path, line);
    p.y = parse_double(tok[1], path, line);
    p.z = parse_double(tok[2], path, line);
    uint64_t sem = parse_uint(tok[3], path, line);
    if (sem > 1) {
        throw ParseError(path, line, "semantic must be 0 or 1");
    }
    p.semantic = static_cast<Semantic>(sem);
    uint64_t inst = parse_uint(tok[4], path, line);
    if (inst > UINT32_MAX) {
        throw ParseError(path, line, "instance id out of range");
    }
    p.instance = static_cast<uint32_t>(inst);
    if (p.instance > 0 && p.semantic != Semantic::tree) {
        throw ParseError(path, line, "instance id " + std::to_string(p.instance) +
                                         " on a non-tree point");
    }
    return p;
}

LabeledPointCloud load_ptc(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string name = path.string();

    LabeledPointCloud cloud;
    std::string line;
    size_t lineno = 0;

    if (!std::getline(in, line)) throw ParseError(name, 1, "empty file, expected '#PTC 1'");
    ++lineno;
    strip_cr(line);
    if (line != kPtcMagic) throw ParseError(name, 1, "expected '#PTC 1'");

    if (!std::getline(in, line)) throw ParseError(name, 2, "missing fields header");
    ++lineno;
    strip_cr(line);
    if (line != kPtcFields) {
        throw ParseError(name, 2, "expected '" + std::string(kPtcFields) + "'");
    }

    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("#source ", 0) == 0) cloud.source_tag = line.substr(8);
            if (line.rfind("#crs ", 0) == 0) cloud.crs_note = line.substr(5);
            continue;
        }
        cloud.points.push_back(parse_point(split_ws(line), name, lineno));
    }
    return cloud;
}

LabeledPointCloud load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string name = path.string();

    LabeledPointCloud cloud;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        std::vector<std::string_view> tok = split_char(line, ',');
        cloud.points.push_back(parse_point(tok, name, lineno));
    }
    return cloud;
}

void write_point(std::ostream& out, const PointRecord& p, char sep) {
    out << fmt_double(p.x) << sep << fmt_double(p.y) << sep << fmt_double(p.z) << sep
        << static_cast<int>(p.semantic) << sep << p.instance << '\n';
}

}  // namespace

CloudFormat format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? CloudFormat::xyz_csv : CloudFormat::ptc;
}

LabeledPointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
    return format == CloudFormat::ptc ? load_ptc(path) : load_csv(path);
}

void save_cloud(const LabeledPointCloud& cloud, const std::filesystem::path& path,
                CloudFormat format) {
    std::vector<Violation> bad = validate(cloud);
    if (!bad.empty()) {
        throw ValidationError("save_cloud: point " + std::to_string(bad.front().point_index) +
                              ": " + bad.front().message);
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    if (format == CloudFormat::ptc) {
        out << kPtcMagic << '\n' << kPtcFields << '\n';
        if (!cloud.source_tag.empty()) out << "#source " << cloud.source_tag << '\n';
        if (!cloud.crs_note.empty()) out << "#crs " << cloud.crs_note << '\n';
        for (const PointRecord& p : cloud.points) write_point(out, p, ' ');
    } else {
        for (const PointRecord& p : cloud.points) write_point(out, p, ',');
    }
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

PointPredictions load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string name = path.string();

    std::string line;
    size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(name, 1, "empty file, expected '#PRD 1'");
    ++lineno;
    strip_cr(line);
    if (line != kPrdMagic) throw ParseError(name, 1, "expected '#PRD 1'");

    PointPredictions preds;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string_view> tok = split_ws(line);
        if (tok.size() != 9) {
            throw ParseError(name, lineno,
                             "expected 9 fields, got " + std::to_string(tok.size()));
        }
        double p = parse_double(tok[0], name, lineno);
        if (p < 0.0 || p > 1.0) {
            throw ParseError(name, lineno, "probability outside [0,1]");
        }
        std::array<double, 3> off;
        for (int i = 0; i < 3; ++i) off[i] = parse_double(tok[1 + i], name, lineno);
        std::array<double, 5> emb;
        for (int i = 0; i < 5; ++i) emb[i] = parse_double(tok[4 + i], name, lineno);
        preds.semantic_prob.push_back(p);
        preds.offset.push_back(off);
        preds.embedding.push_back(emb);
    }
    return preds;
}

void save_predictions(const PointPredictions& preds, const std::filesystem::path& path) {
    preds.check();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << kPrdMagic << '\n';
    for (size_t i = 0; i < preds.size(); ++i) {
        out << fmt_double(preds.semantic_prob[i]);
        for (double v : preds.offset[i]) out << ' ' << fmt_double(v);
        for (double v : preds.embedding[i]) out << ' ' << fmt_double(v);
        out << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

LabeledPointCloud with_predicted_instances(const LabeledPointCloud& cloud,
                                           const InstanceSegmentation& seg,
                                           std::span<const uint32_t> mask) {
    if (seg.ids.size() != cloud.size()) {
        throw AlignmentError("segmentation length " + std::to_string(seg.ids.size()) +
                             " vs cloud length " + std::to_string(cloud.size()));
    }
    LabeledPointCloud out = cloud;
    for (PointRecord& p : out.points) {
        p.semantic = Semantic::non_tree;
        p.instance = 0;
    }
    for (uint32_t i : mask) out.points[i].semantic = Semantic::tree;
    for (size_t i = 0; i < seg.ids.size(); ++i) {
        if (seg.ids[i] > 0) {
            out.points[i].instance = seg.ids[i];
            out.points[i].semantic = Semantic::tree;
        }
    }
    return out;
}

}  // namespace treekit
