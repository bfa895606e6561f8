#include "evonav/aki.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "evonav/error.hpp"
#include "evonav/text.hpp"

namespace evonav {

std::vector<Heuristic> extract_heuristics(HeuristicExtractorBackend& extractor, const MemoryGraph& graph,
                                          std::vector<std::string>* warnings) {
    if (!graph.finalized()) throw ContractError("graph must be finalized");
    try {
        auto out = extractor.extract(graph);
        for (auto& h : out) {
            if (h.pattern_id.empty() || !(h.confidence >= 0.0 && h.confidence <= 1.0))
                throw BackendError("extractor produced an invalid heuristic");
            h.outcome_tag = graph.root().outcome;
            h.source_episode = graph.root().episode_id;
        }
        return out;
    } catch (const std::exception& e) {
        if (warnings) warnings->push_back(std::string("heuristic extraction failed: ") + e.what());
        return {};
    }
}

bool heuristic_less(const Heuristic& a, const Heuristic& b) {
    return std::tie(a.pattern_id, a.description, a.strategy, a.confidence, a.outcome_tag, a.source_episode) <
           std::tie(b.pattern_id, b.description, b.strategy, b.confidence, b.outcome_tag, b.source_episode);
}

std::vector<std::vector<Heuristic>> cluster(const std::vector<Heuristic>& heuristics, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ContractError("similarity threshold out of [0,1]");
    std::vector<Heuristic> items = heuristics;
    std::sort(items.begin(), items.end(), heuristic_less);
    const std::size_t n = items.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<std::string> texts;
    for (const auto& h : items) texts.push_back(h.description + " " + h.strategy);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n && items[j].pattern_id == items[i].pattern_id; ++j) {
            if (find(i) == find(j)) continue;
            if (text::text_similarity(texts[i], texts[j]) >= threshold) parent[find(j)] = find(i);
        }
    }
    std::map<std::size_t, std::vector<Heuristic>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(items[i]);
    std::vector<std::vector<Heuristic>> out;
    for (auto& [_, members] : groups) out.push_back(std::move(members));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return heuristic_less(a.front(), b.front()); });
    return out;
}

MergedHeuristic merge_cluster(const std::vector<Heuristic>& members, HeuristicMergerBackend& merger) {
    if (members.empty()) throw ContractError("empty cluster");
    for (const auto& h : members)
        if (h.pattern_id != members.front().pattern_id) throw ContractError("mixed pattern ids in cluster");
    std::vector<Heuristic> sorted = members;
    std::sort(sorted.begin(), sorted.end(), heuristic_less);

    MergedHeuristic m;
    m.pattern_id = sorted.front().pattern_id;
    std::tie(m.description, m.strategy) = merger.merge(sorted);
    std::vector<double> conf;
    for (const auto& h : sorted) {
        conf.push_back(h.confidence);
        (h.outcome_tag == Outcome::Success ? m.success_count : m.failure_count) += 1;
        m.provenance.push_back(h.source_episode);
    }
    std::sort(conf.begin(), conf.end());
    double sum = 0;
    for (double c : conf) sum += c;
    m.confidence = std::clamp(sum / static_cast<double>(conf.size()), conf.front(), conf.back());
    m.support = static_cast<int>(sorted.size());
    std::sort(m.provenance.begin(), m.provenance.end());
    return m;
}

namespace {

bool merged_less(const MergedHeuristic& a, const MergedHeuristic& b) {
    return std::tie(a.pattern_id, a.description, a.strategy, a.provenance, a.confidence) <
           std::tie(b.pattern_id, b.description, b.strategy, b.provenance, b.confidence);
}

std::vector<MergedHeuristic> merge_groups(const std::vector<Heuristic>& raw, const std::set<std::string>& patterns,
                                          double threshold, HeuristicMergerBackend& merger) {
    std::vector<Heuristic> subset;
    for (const auto& h : raw)
        if (patterns.count(h.pattern_id)) subset.push_back(h);
    std::vector<MergedHeuristic> out;
    for (const auto& c : cluster(subset, threshold)) out.push_back(merge_cluster(c, merger));
    return out;
}

}  // namespace

void HeuristicLibrary::update(const std::vector<Heuristic>& heuristics, double threshold,
                              HeuristicMergerBackend& merger) {
    if (heuristics.empty()) return;
    std::set<std::string> affected;
    for (const auto& h : heuristics) {
        if (h.pattern_id.empty()) throw ContractError("heuristic pattern_id must be non-empty");
        if (!(h.confidence >= 0.0 && h.confidence <= 1.0)) throw ContractError("heuristic confidence out of [0,1]");
        affected.insert(h.pattern_id);
        raw_.push_back(h);
    }
    std::vector<MergedHeuristic> next;
    for (auto& m : merged_)
        if (!affected.count(m.pattern_id)) next.push_back(std::move(m));
    for (auto& m : merge_groups(raw_, affected, threshold, merger)) next.push_back(std::move(m));
    std::sort(next.begin(), next.end(), merged_less);
    merged_ = std::move(next);
}

HeuristicLibrary HeuristicLibrary::rebuild(const std::vector<Heuristic>& raw, double threshold,
                                           HeuristicMergerBackend& merger) {
    HeuristicLibrary lib;
    lib.raw_ = raw;
    std::set<std::string> all;
    for (const auto& h : raw) all.insert(h.pattern_id);
    lib.merged_ = merge_groups(raw, all, threshold, merger);
    std::sort(lib.merged_.begin(), lib.merged_.end(), merged_less);
    return lib;
}

HeuristicLibrary update_library(HeuristicLibrary library, const std::vector<Heuristic>& heuristics, double threshold,
                                HeuristicMergerBackend& merger) {
    library.update(heuristics, threshold, merger);
    return library;
}

std::vector<MergedHeuristic> select_guidance(const HeuristicLibrary& library, double confidence_floor, int min_support,
                                             std::size_t cap) {
    std::vector<MergedHeuristic> out;
    for (const auto& m : library.merged())
        if (m.confidence >= confidence_floor && m.support >= min_support) out.push_back(m);
    std::sort(out.begin(), out.end(), [](const MergedHeuristic& a, const MergedHeuristic& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        if (a.support != b.support) return a.support > b.support;
        if (a.pattern_id != b.pattern_id) return a.pattern_id < b.pattern_id;
        return merged_less(a, b);
    });
    if (out.size() > cap) out.resize(cap);
    return out;
}

// ---------------------------------------------------------------- persistence

std::string encode_heuristic(const Heuristic& h) {
    return text::escape(h.pattern_id) + ' ' + text::escape(h.description) + ' ' + text::escape(h.strategy) + ' ' +
           text::format_hexfloat(h.confidence) + ' ' + to_string(h.outcome_tag) + ' ' + text::escape(h.source_episode);
}

Heuristic decode_heuristic(const std::string& line) {
    std::istringstream in(line);
    std::string p, d, a, c, y, src;
    if (!(in >> p >> d >> a >> c >> y >> src)) throw ParseError("malformed heuristic record", 0);
    Heuristic h{text::unescape(p), text::unescape(d), text::unescape(a), text::parse_double(c), parse_outcome(y),
                text::unescape(src)};
    if (h.outcome_tag == Outcome::Pending) throw ParseError("heuristic outcome must be SUCCESS or FAILURE", 0);
    return h;
}

std::string encode_merged(const MergedHeuristic& m) {
    std::string prov;
    for (std::size_t i = 0; i < m.provenance.size(); ++i) prov += (i ? ";" : "") + text::escape(m.provenance[i]);
    return text::escape(m.pattern_id) + ' ' + text::escape(m.description) + ' ' + text::escape(m.strategy) + ' ' +
           text::format_hexfloat(m.confidence) + ' ' + std::to_string(m.support) + ' ' +
           std::to_string(m.success_count) + ' ' + std::to_string(m.failure_count) + ' ' + prov;
}

namespace {

std::string merged_index(const std::vector<MergedHeuristic>& merged) {
    std::string out = "evonav-merged 1\n";
    for (const auto& m : merged) out += encode_merged(m) + "\n";
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return {};
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

void HeuristicLibrary::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream raw(dir / "raw.log", std::ios::binary);
    for (const auto& h : raw_) raw << encode_heuristic(h) << "\n";
    std::ofstream(dir / "merged.idx", std::ios::binary) << merged_index(merged_);
}

void HeuristicLibrary::append_save(const std::filesystem::path& dir, std::size_t already_saved) const {
    std::filesystem::create_directories(dir);
    std::ofstream raw(dir / "raw.log", std::ios::binary | std::ios::app);
    for (std::size_t i = already_saved; i < raw_.size(); ++i) raw << encode_heuristic(raw_[i]) << "\n";
    std::ofstream(dir / "merged.idx", std::ios::binary) << merged_index(merged_);
}

HeuristicLibrary HeuristicLibrary::load(const std::filesystem::path& dir, double threshold,
                                        HeuristicMergerBackend& merger) {
    std::vector<Heuristic> raw;
    const std::string data = slurp(dir / "raw.log");
    std::size_t pos = 0;
    while (pos < data.size()) {
        const std::size_t nl = data.find('\n', pos);
        if (nl == std::string::npos) throw ParseError("raw log record not newline-terminated", pos);
        const std::string line = data.substr(pos, nl - pos);
        if (!line.empty()) {
            try {
                raw.push_back(decode_heuristic(line));
            } catch (const ParseError& e) {
                throw ParseError(std::string("raw log: ") + e.what(), pos);
            }
        }
        pos = nl + 1;
    }
    HeuristicLibrary lib = rebuild(raw, threshold, merger);
    if (std::filesystem::exists(dir / "merged.idx") && slurp(dir / "merged.idx") != merged_index(lib.merged_))
        throw ParseError("merged index does not match the raw log", 0);
    return lib;
}

}  // namespace evonav
