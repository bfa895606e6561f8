#include "evonav/lpm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "evonav/error.hpp"
#include "evonav/text.hpp"

namespace evonav {

namespace {

void add_feature(Embedding& v, const std::string& token, double weight) {
    const std::uint64_t h = text::fnv1a(token);
    v[h % v.size()] += (h >> 63) ? -weight : weight;
}

void normalize(Embedding& v) {
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n == 0) {
        v[0] = 1.0;
        return;
    }
    for (double& x : v) x /= n;
}

std::vector<std::string> goal_tokens(const GoalSpec& goal) {
    std::vector<std::string> t{"task:" + to_string(goal.kind), "map:" + std::to_string(goal.map_seed)};
    if (goal.kind == TaskKind::AEQA)
        t.push_back("cat:" + goal.category);
    else
        t.push_back("goal:" + std::to_string(goal.target.x) + "," + std::to_string(goal.target.y));
    return t;
}

}  // namespace

Embedding embed_state(const GoalSpec& goal, const SubtaskNode& subtask) {
    Embedding v(kEmbeddingDim, 0.0);
    const auto tokens = goal_tokens(goal);
    for (std::size_t i = 0; i < tokens.size(); ++i) add_feature(v, tokens[i], i == 0 ? 1.0 : 2.0);
    if (!subtask.pose_trace.empty()) {
        const Pose& p = subtask.pose_trace.front();
        add_feature(v, "pose:" + std::to_string(p.x / 2) + "," + std::to_string(p.y / 2), 2.0);
        add_feature(v, "area:" + std::to_string(p.x / 4) + "," + std::to_string(p.y / 4), 0.5);
        add_feature(v, "head:" + std::to_string(move_direction(p.heading)), 0.5);
    }
    std::vector<std::string> objects = subtask.visible_objects;
    std::sort(objects.begin(), objects.end());
    for (const auto& o : objects) add_feature(v, "obj:" + o, 0.3);
    for (const auto& t : text::tokenize(subtask.rationale)) add_feature(v, "r:" + t, 0.2);
    normalize(v);
    return v;
}

Embedding query_embedding(const GoalSpec& goal, const Observation& obs) {
    SubtaskNode q;
    q.pose_trace = {obs.agent_pose};
    for (const auto& o : obs.visible_objects) q.visible_objects.push_back(o.color + " " + o.category);
    return embed_state(goal, q);
}

std::vector<Principle> build_principles(const MemoryGraph& graph, PrincipleAnalyzerBackend& analyzer, int k,
                                        std::vector<std::string>* warnings) {
    if (!graph.finalized()) throw ContractError("graph must be finalized");
    const auto& root = graph.root();
    const PrincipleKind kind = root.outcome == Outcome::Success ? PrincipleKind::Guiding : PrincipleKind::Cautionary;
    std::vector<Principle> out;
    for (NodeId id : graph.subtask_ids()) {
        const auto tau = graph.downstream_trajectory(id, k);
        std::string body;
        try {
            body = analyzer.analyze(tau, root.outcome, root.goal);
        } catch (const std::exception& e) {
            if (warnings) warnings->push_back("principle analyzer failed on subtask " + std::to_string(id.value) + ": " + e.what());
            continue;
        }
        out.push_back({kind, std::move(body), root.episode_id, id, embed_state(root.goal, graph.subtask(id))});
    }
    return out;
}

double embedding_distance(const Embedding& a, const Embedding& b) {
    if (a.size() != b.size()) throw ContractError("embedding dimension mismatch");
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

Embedding mean_subtask_embedding(const MemoryGraph& graph) {
    Embedding m(kEmbeddingDim, 0.0);
    const auto& ids = graph.subtask_ids();
    for (NodeId id : ids) {
        const auto e = embed_state(graph.root().goal, graph.subtask(id));
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += e[i];
    }
    if (!ids.empty())
        for (double& x : m) x /= static_cast<double>(ids.size());
    return m;
}

std::vector<std::size_t> select_diverse_failures(const std::vector<MemoryGraph>& failures, int m) {
    if (m < 1) throw ContractError("max_episodes_per_goal must be >= 1");
    const std::size_t n = failures.size();
    if (n <= static_cast<std::size_t>(m)) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        return all;
    }
    // longest failure, ties to the earlier episode id
    std::size_t longest = 0;
    for (std::size_t i = 1; i < n; ++i) {
        const auto& a = failures[i].root();
        const auto& b = failures[longest].root();
        if (a.total_steps > b.total_steps || (a.total_steps == b.total_steps && a.episode_id < b.episode_id))
            longest = i;
    }
    if (m == 1) return {longest};

    std::vector<Embedding> emb;
    for (const auto& g : failures) emb.push_back(mean_subtask_embedding(g));
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = embedding_distance(emb[i], emb[j]);

    auto id_of = [&](std::size_t i) -> const std::string& { return failures[i].root().episode_id; };
    // Seed with the farthest pair; among equally far pairs prefer one holding the longest failure.
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (i == bi && j == bj) continue;
            const double d = dist[i][j], bd = dist[bi][bj];
            if (d > bd) {
                bi = i, bj = j;
                continue;
            }
            if (d < bd) continue;
            const bool has = i == longest || j == longest;
            const bool best_has = bi == longest || bj == longest;
            if (has != best_has) {
                if (has) bi = i, bj = j;
                continue;
            }
            const auto key = std::minmax(id_of(i), id_of(j));
            const auto best_key = std::minmax(id_of(bi), id_of(bj));
            if (key < best_key) bi = i, bj = j;
        }
    }
    std::vector<std::size_t> chosen{bi, bj};
    std::vector<bool> used(n, false);
    used[bi] = used[bj] = true;
    while (chosen.size() < static_cast<std::size_t>(m)) {
        std::size_t best = n;
        double best_min = -1;
        for (std::size_t c = 0; c < n; ++c) {
            if (used[c]) continue;
            double md = INFINITY;
            for (std::size_t s : chosen) md = std::min(md, dist[c][s]);
            if (best == n || md > best_min || (md == best_min && id_of(c) < id_of(best))) {
                best = c;
                best_min = md;
            }
        }
        used[best] = true;
        chosen.push_back(best);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

// ---------------------------------------------------------------- bank

std::size_t EpisodeBank::size() const {
    std::size_t n = 0;
    for (const auto& [_, list] : episodes_) n += list.size();
    return n;
}

bool EpisodeBank::contains(const std::string& episode_id) const {
    for (const auto& [_, list] : episodes_)
        for (const auto& g : list)
            if (g.root().episode_id == episode_id) return true;
    return false;
}

std::vector<MemoryGraph> EpisodeBank::trajectories(const std::string& goal_digest) const {
    const auto it = episodes_.find(goal_digest);
    return it == episodes_.end() ? std::vector<MemoryGraph>{} : it->second;
}

void EpisodeBank::commit(MemoryGraph graph, std::vector<Principle> principles, int max_per_goal) {
    if (!graph.finalized()) throw ContractError("graph must be finalized");
    const std::string id = graph.root().episode_id;
    if (contains(id)) throw ContractError("duplicate episode id '" + id + "'");
    for (const auto& p : principles) {
        if (p.source_episode != id) throw ContractError("principle does not belong to episode '" + id + "'");
        if (!principles_.empty() && p.embedding.size() != principles_.front().embedding.size())
            throw ContractError("embedding dimension mismatch");
    }
    const std::string goal = graph.root().goal.digest();
    episodes_[goal].push_back(std::move(graph));
    for (auto& p : principles) principles_.push_back(std::move(p));
    consolidate(goal, max_per_goal);
}

void EpisodeBank::consolidate(const std::string& goal_digest, int max_per_goal) {
    if (max_per_goal < 1) throw ContractError("max_episodes_per_goal must be >= 1");
    const auto it = episodes_.find(goal_digest);
    if (it == episodes_.end()) return;
    auto& list = it->second;
    std::vector<std::size_t> successes, failures;
    for (std::size_t i = 0; i < list.size(); ++i)
        (list[i].root().outcome == Outcome::Success ? successes : failures).push_back(i);

    std::vector<std::size_t> keep;
    if (!successes.empty()) {
        std::sort(successes.begin(), successes.end(), [&](std::size_t a, std::size_t b) {
            const auto& ra = list[a].root();
            const auto& rb = list[b].root();
            if (ra.total_steps != rb.total_steps) return ra.total_steps < rb.total_steps;
            return ra.episode_id < rb.episode_id;
        });
        successes.resize(std::min(successes.size(), static_cast<std::size_t>(max_per_goal)));
        keep = successes;
    } else {
        std::vector<MemoryGraph> fails;
        for (std::size_t i : failures) fails.push_back(list[i]);
        for (std::size_t k : select_diverse_failures(fails, max_per_goal)) keep.push_back(failures[k]);
    }
    std::sort(keep.begin(), keep.end());

    std::set<std::string> evicted;
    std::vector<MemoryGraph> kept;
    for (std::size_t i = 0, k = 0; i < list.size(); ++i) {
        if (k < keep.size() && keep[k] == i) {
            kept.push_back(std::move(list[i]));
            ++k;
        } else {
            evicted.insert(list[i].root().episode_id);
        }
    }
    list = std::move(kept);
    if (!evicted.empty())
        principles_.erase(std::remove_if(principles_.begin(), principles_.end(),
                                         [&](const Principle& p) { return evicted.count(p.source_episode) > 0; }),
                          principles_.end());
}

std::vector<std::pair<Principle, double>> EpisodeBank::retrieve(const Embedding& query, double threshold,
                                                                std::size_t top_n) const {
    std::vector<std::pair<Principle, double>> out;
    for (const auto& p : principles_) {
        if (p.embedding.size() != query.size())
            throw ContractError("query dimension " + std::to_string(query.size()) + " does not match store dimension " +
                                std::to_string(p.embedding.size()));
        const double s = text::cosine(query, p.embedding);
        if (s >= threshold) out.emplace_back(p, s);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (out.size() > top_n) out.resize(top_n);
    return out;
}

// ---------------------------------------------------------------- persistence

void EpisodeBank::save(const std::filesystem::path& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "episodes");
    std::set<std::string> live;
    std::ostringstream index;
    index << "evonav-bank 1\n";
    for (const auto& [goal, list] : episodes_) {
        for (const auto& g : list) {
            const std::string id = g.root().episode_id;
            const std::string file = text::escape(id) + ".mem";
            live.insert(file);
            std::ofstream(dir / "episodes" / file, std::ios::binary) << g.serialize();
            index << "episode " << text::escape(goal) << ' ' << text::escape(id) << "\n";
        }
    }
    for (const auto& entry : fs::directory_iterator(dir / "episodes"))
        if (entry.path().extension() == ".mem" && !live.count(entry.path().filename().string()))
            fs::remove(entry.path());
    std::ofstream(dir / "index.txt", std::ios::binary) << index.str();

    std::ostringstream pr;
    pr << "evonav-principles 1\n";
    for (const auto& p : principles_) {
        pr << to_string(p.kind) << ' ' << text::escape(p.source_episode) << ' ' << p.source_subtask.value << ' ';
        for (std::size_t i = 0; i < p.embedding.size(); ++i) pr << (i ? ";" : "") << text::format_hexfloat(p.embedding[i]);
        pr << ' ' << text::escape(p.text) << "\n";
    }
    std::ofstream(dir / "principles.txt", std::ios::binary) << pr.str();
}

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

EpisodeBank EpisodeBank::load(const std::filesystem::path& dir) {
    EpisodeBank bank;
    if (!std::filesystem::exists(dir / "index.txt")) return bank;
    std::istringstream index(read_file(dir / "index.txt"));
    std::string line;
    std::getline(index, line);
    if (line != "evonav-bank 1") throw ParseError("bad bank index header", 0);
    std::size_t line_no = 1;
    while (std::getline(index, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream in(line);
        std::string kind, goal, id;
        if (!(in >> kind >> goal >> id) || kind != "episode") throw ParseError("bad index record", line_no);
        auto g = MemoryGraph::deserialize(read_file(dir / "episodes" / (id + ".mem")));
        if (g.root().episode_id != text::unescape(id)) throw ParseError("episode file id mismatch", line_no);
        bank.episodes_[text::unescape(goal)].push_back(std::move(g));
    }
    std::istringstream pr(read_file(dir / "principles.txt"));
    std::getline(pr, line);
    if (line != "evonav-principles 1") throw ParseError("bad principles header", 0);
    line_no = 1;
    while (std::getline(pr, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream in(line);
        std::string kind, ep, emb, body;
        std::uint32_t sub;
        if (!(in >> kind >> ep >> sub >> emb >> body)) throw ParseError("bad principle record", line_no);
        Principle p;
        p.kind = parse_principle_kind(kind);
        p.source_episode = text::unescape(ep);
        p.source_subtask = NodeId{sub};
        for (const auto& v : text::split(emb, ';')) p.embedding.push_back(text::parse_double(v));
        p.text = text::unescape(body);
        bank.principles_.push_back(std::move(p));
    }
    return bank;
}

std::vector<std::pair<Principle, double>> retrieve(const EpisodeBank& bank, const Embedding& query, double threshold,
                                                   std::size_t top_n) {
    return bank.retrieve(query, threshold, top_n);
}

EpisodeBank consolidate(EpisodeBank bank, const std::string& goal_digest, int max_per_goal) {
    bank.consolidate(goal_digest, max_per_goal);
    return bank;
}

EpisodeBank commit_episode(EpisodeBank bank, MemoryGraph graph, std::vector<Principle> principles, int max_per_goal) {
    bank.commit(std::move(graph), std::move(principles), max_per_goal);
    return bank;
}

}  // namespace evonav
