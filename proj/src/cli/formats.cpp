#include <atomic>
#include <charconv>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "bexp/cli.hpp"

namespace bexp::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path.string());
    return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    static std::atomic<unsigned> counter{0};
    fs::path tmp = path;
    tmp += ".tmp" + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("cannot write " + path.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move output into place: " + path.string());
    }
}

// ---------------------------------------------------------------------------
// BED1
// ---------------------------------------------------------------------------

namespace {

template <class T>
T parse_int(std::string_view s, const char* what) {
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw UsageError(std::string("bad ") + what + ": '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) throw UsageError("dataset must end with a newline");
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

}  // namespace

std::string format_dataset(const Dataset& ds) {
    std::string s = "BED1 " + std::to_string(ds.records.size()) + " " + std::to_string(ds.shape.height) + " " +
                    std::to_string(ds.shape.width) + "\n";
    s.reserve(s.size() + ds.records.size() * (ds.shape.size() + 1));
    for (const BinaryVector& x : ds.records) {
        if (x.dim() != ds.shape.size()) throw UsageError("record does not match the dataset shape");
        for (std::uint8_t b : x.bits) s.push_back(b ? '1' : '0');
        s.push_back('\n');
    }
    return s;
}

Dataset parse_dataset(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw UsageError("empty dataset");
    const std::string_view head = lines[0];
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos <= head.size()) {
        const std::size_t sp = std::min(head.find(' ', pos), head.size());
        fields.push_back(head.substr(pos, sp - pos));
        pos = sp + 1;
    }
    if (fields.size() != 4 || fields[0] != "BED1") throw UsageError("dataset header must be 'BED1 <N> <H> <W>'");
    const auto n = parse_int<std::size_t>(fields[1], "record count");
    Dataset ds;
    ds.shape = {parse_int<int>(fields[2], "height"), parse_int<int>(fields[3], "width")};
    if (!ds.shape.is_image()) throw UsageError("dataset shape must be positive");
    if (lines.size() != n + 1) {
        throw UsageError("dataset declares " + std::to_string(n) + " records but has " + std::to_string(lines.size() - 1));
    }
    const std::size_t d = ds.shape.size();
    ds.records.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) {
        const std::string_view line = lines[i];
        if (line.size() != d) throw UsageError("record " + std::to_string(i) + " has length " + std::to_string(line.size()));
        std::vector<std::uint8_t> bits(d);
        for (std::size_t j = 0; j < d; ++j) {
            if (line[j] != '0' && line[j] != '1') throw UsageError("record " + std::to_string(i) + " has a non-binary character");
            bits[j] = line[j] == '1';
        }
        ds.records.emplace_back(std::move(bits), ds.shape);
    }
    return ds;
}

Dataset read_dataset(const fs::path& path) { return parse_dataset(read_file(path)); }

void write_dataset(const fs::path& path, const Dataset& ds) { write_file_atomic(path, format_dataset(ds)); }

// ---------------------------------------------------------------------------
// Model JSON
// ---------------------------------------------------------------------------

std::string format_model(const ExpertModel& model) {
    json j;
    j["version"] = 1;
    j["rule"] = std::string(rule_name(model.rule.variant));
    j["q"] = model.rule.q;
    j["epsilon"] = model.epsilon;
    const Shape s = model.shape();
    j["shape"] = {s.height, s.width};
    j["experts"] = json::array();
    for (const auto& t : model.templates) j["experts"].push_back(t.probs);
    j["counts"] = model.counts;
    j["transform_grid"] = {{"shifts_x", model.grid.shifts_x},
                           {"shifts_y", model.grid.shifts_y},
                           {"rotations", model.grid.rotations}};
    if (model.geometry) {
        j["geometry"] = {{"mean", model.geometry->mean},
                         {"cov", model.geometry->cov},
                         {"n", model.geometry->sample_count}};
    } else {
        j["geometry"] = nullptr;
    }
    j["one_transform_per_expert"] = model.one_transform_per_expert;
    if (model.background) {
        j["background"] = *model.background;
    } else {
        j["background"] = nullptr;
    }
    return j.dump(1) + "\n";
}

ExpertModel parse_model(std::string_view text) {
    try {
        const json j = json::parse(text);
        if (j.at("version").get<int>() != 1) throw UsageError("unsupported model version");
        ExpertModel m;
        m.rule.variant = parse_rule(j.at("rule").get<std::string>());
        m.rule.q = j.at("q").get<double>();
        m.epsilon = j.at("epsilon").get<double>();
        const auto shape = j.at("shape").get<std::vector<int>>();
        if (shape.size() != 2) throw UsageError("model shape must be [H, W]");
        const Shape s{shape[0], shape[1]};
        for (const auto& e : j.at("experts")) m.templates.emplace_back(e.get<std::vector<double>>(), s);
        m.counts = j.at("counts").get<std::vector<std::vector<double>>>();
        const json& g = j.at("transform_grid");
        m.grid.shifts_x = g.at("shifts_x").get<std::vector<int>>();
        m.grid.shifts_y = g.at("shifts_y").get<std::vector<int>>();
        m.grid.rotations = g.at("rotations").get<std::vector<double>>();
        if (const auto it = j.find("geometry"); it != j.end() && !it->is_null()) {
            GeometricModel geo;
            geo.mean = it->at("mean").get<std::vector<double>>();
            geo.cov = it->at("cov").get<std::vector<std::vector<double>>>();
            geo.sample_count = it->at("n").get<std::size_t>();
            m.geometry = std::move(geo);
        }
        if (const auto it = j.find("one_transform_per_expert"); it != j.end()) m.one_transform_per_expert = it->get<bool>();
        if (const auto it = j.find("background"); it != j.end() && !it->is_null()) m.background = it->get<double>();
        if (m.templates.empty()) throw UsageError("model has no experts");
        for (const auto& t : m.templates) {
            if (t.dim() != s.size()) throw UsageError("expert length does not match the model shape");
        }
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed model file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("invalid model: ") + e.what());
    }
}

ExpertModel read_model(const fs::path& path) { return parse_model(read_file(path)); }

void write_model(const fs::path& path, const ExpertModel& model) { write_file_atomic(path, format_model(model)); }

// ---------------------------------------------------------------------------
// Representations
// ---------------------------------------------------------------------------

std::string format_representations(std::span<const Representation> reps) {
    json arr = json::array();
    for (const Representation& r : reps) {
        json picks = json::array();
        for (const Pick& p : r.picks) picks.push_back({p.expert, p.transform});
        arr.push_back({{"picks", picks}, {"loglik", r.loglik}, {"trace", r.trace}});
    }
    return arr.dump(1) + "\n";
}

std::vector<Representation> parse_representations(std::string_view text) {
    try {
        std::vector<Representation> out;
        for (const json& r : json::parse(text)) {
            Representation rep;
            for (const json& p : r.at("picks")) {
                if (p.size() != 2) throw UsageError("a pick is [expert, transform]");
                rep.picks.push_back({p[0].get<std::size_t>(), p[1].get<std::size_t>()});
            }
            rep.loglik = r.at("loglik").get<double>();
            rep.trace = r.at("trace").get<std::vector<double>>();
            out.push_back(std::move(rep));
        }
        return out;
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed representations file: ") + e.what());
    }
}

}  // namespace bexp::cli
