#include "tabgen/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <json.hpp>

#include "tabgen/rng.hpp"
#include "tabgen/song.hpp"

namespace tabgen {
namespace lm {

std::string NgramModel::context_key(std::span<const int> context) {
    std::string key(context.size() * sizeof(int), '\0');
    if (!context.empty()) std::memcpy(key.data(), context.data(), key.size());
    return key;
}

NgramModel NgramModel::train(std::span<const std::vector<std::string>> corpus, int order,
                             double lambda, double interpolation_base) {
    if (order < 1) throw Error("n-gram order must be >= 1");
    if (lambda <= 0) throw Error("smoothing lambda must be > 0");

    NgramModel model;
    model.order_ = order;
    model.lambda_ = lambda;
    model.interpolation_base_ = interpolation_base;
    model.tables_.resize(static_cast<size_t>(order) + 1);

    long total_tokens = 0;
    for (const auto& sequence : corpus) {
        for (const auto& text : sequence) {
            model.vocab_.add(text);
            ++total_tokens;
        }
    }
    if (corpus.empty() || total_tokens == 0) {
        throw EmptyCorpusError("cannot train on an empty corpus");
    }

    for (const auto& sequence : corpus) {
        std::vector<int> ids;
        ids.reserve(sequence.size());
        for (const auto& text : sequence) ids.push_back(model.vocab_.id_of(text));
        for (size_t i = 0; i < ids.size(); ++i) {
            const int token = ids[i];
            const int max_k = static_cast<int>(std::min<size_t>(i, static_cast<size_t>(order)));
            for (int k = 0; k <= max_k; ++k) {
                auto context = std::span(ids).subspan(i - static_cast<size_t>(k),
                                                      static_cast<size_t>(k));
                Row& row = model.tables_[static_cast<size_t>(k)][context_key(context)];
                ++row.counts[token];
                ++row.total;
            }
        }
    }
    return model;
}

std::vector<double> NgramModel::next_distribution(std::span<const int> context) const {
    const int vocab_size = vocab_.size();
    std::vector<const Row*> matched;  // index = context length
    const size_t max_len = std::min(context.size(), static_cast<size_t>(order_));
    for (size_t k = 0; k <= max_len; ++k) {
        auto it = tables_[k].find(context_key(context.last(k)));
        if (it == tables_[k].end()) break;  // longer suffixes cannot match either
        matched.push_back(&it->second);
    }

    double weight_sum = 0;
    std::vector<double> weights(matched.size());
    for (size_t k = 0; k < matched.size(); ++k) {
        weights[k] = std::pow(interpolation_base_, static_cast<double>(k));
        weight_sum += weights[k];
    }

    std::vector<double> dist(static_cast<size_t>(vocab_size), 0.0);
    for (size_t k = 0; k < matched.size(); ++k) {
        const Row& row = *matched[k];
        const double w = weights[k] / weight_sum;
        const double denom = static_cast<double>(row.total) + lambda_ * vocab_size;
        const double floor = w * lambda_ / denom;
        for (auto& p : dist) p += floor;
        for (const auto& [token, count] : row.counts) {
            dist[static_cast<size_t>(token)] += w * static_cast<double>(count) / denom;
        }
    }
    return dist;
}

long NgramModel::context_count(std::span<const int> context, int token) const {
    if (context.size() >= tables_.size()) return 0;
    auto it = tables_[context.size()].find(context_key(context));
    if (it == tables_[context.size()].end()) return 0;
    auto ct = it->second.counts.find(token);
    return ct == it->second.counts.end() ? 0 : ct->second;
}

std::string NgramModel::to_json() const {
    nlohmann::json j;
    j["format"] = "tabgen-ngram";
    j["version"] = 1;
    j["order"] = order_;
    j["lambda"] = lambda_;
    j["interpolation_base"] = interpolation_base_;
    auto& vocab = j["vocabulary"] = nlohmann::json::array();
    for (const auto& text : vocab_.texts()) vocab.push_back(text);

    auto& tables = j["tables"] = nlohmann::json::array();
    for (const auto& table : tables_) {
        // Sort contexts for a stable dump.
        std::vector<const std::pair<const std::string, Row>*> rows;
        rows.reserve(table.size());
        for (const auto& entry : table) rows.push_back(&entry);
        std::sort(rows.begin(), rows.end(),
                  [](const auto* a, const auto* b) { return a->first < b->first; });

        nlohmann::json jt = nlohmann::json::array();
        for (const auto* entry : rows) {
            const auto& key = entry->first;
            std::vector<int> context(key.size() / sizeof(int));
            if (!context.empty()) std::memcpy(context.data(), key.data(), key.size());

            std::vector<std::pair<int, long>> counts(entry->second.counts.begin(),
                                                     entry->second.counts.end());
            std::sort(counts.begin(), counts.end());
            nlohmann::json jc = nlohmann::json::array();
            for (const auto& [token, count] : counts) jc.push_back({token, count});
            jt.push_back({{"context", context}, {"counts", jc}});
        }
        tables.push_back(std::move(jt));
    }
    return j.dump();
}

NgramModel NgramModel::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", "") != "tabgen-ngram" || j.value("version", 0) != 1) {
        throw Error("unrecognized model file format");
    }
    NgramModel model;
    model.order_ = j.at("order").get<int>();
    model.lambda_ = j.at("lambda").get<double>();
    model.interpolation_base_ = j.at("interpolation_base").get<double>();

    const auto& vocab = j.at("vocabulary");
    for (size_t i = 1; i < vocab.size(); ++i) {
        model.vocab_.add(vocab[i].get<std::string>());
    }

    const auto& tables = j.at("tables");
    model.tables_.resize(tables.size());
    for (size_t k = 0; k < tables.size(); ++k) {
        for (const auto& entry : tables[k]) {
            std::vector<int> context = entry.at("context").get<std::vector<int>>();
            Row row;
            for (const auto& pair : entry.at("counts")) {
                const int token = pair[0].get<int>();
                const long count = pair[1].get<long>();
                row.counts[token] = count;
                row.total += count;
            }
            model.tables_[k].emplace(context_key(context), std::move(row));
        }
    }
    return model;
}

std::vector<std::pair<int, double>> top_k_temperature(std::span<const double> distribution,
                                                      int top_k, double temperature) {
    if (top_k < 1) throw Error("top_k must be >= 1");
    if (temperature <= 0) throw Error("temperature must be > 0");

    std::vector<int> ids(distribution.size());
    for (size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    const size_t k = std::min(static_cast<size_t>(top_k), ids.size());
    std::partial_sort(ids.begin(), ids.begin() + static_cast<long>(k), ids.end(),
                      [&](int a, int b) {
                          if (distribution[static_cast<size_t>(a)] !=
                              distribution[static_cast<size_t>(b)]) {
                              return distribution[static_cast<size_t>(a)] >
                                     distribution[static_cast<size_t>(b)];
                          }
                          return a < b;  // ties at the cutoff: smaller id wins
                      });

    std::vector<std::pair<int, double>> kept;
    kept.reserve(k);
    double total = 0;
    for (size_t i = 0; i < k; ++i) {
        const double p = distribution[static_cast<size_t>(ids[i])];
        const double scaled = p > 0 ? std::pow(p, 1.0 / temperature) : 0.0;
        kept.emplace_back(ids[i], scaled);
        total += scaled;
    }
    std::sort(kept.begin(), kept.end());  // ascending id for deterministic sampling walks
    if (total > 0) {
        for (auto& [id, p] : kept) p /= total;
    } else {
        for (auto& [id, p] : kept) p = 1.0 / static_cast<double>(kept.size());
    }
    return kept;
}

std::vector<std::string> sample(const SequenceModel& model, std::span<const std::string> prompt,
                                const GenerationConfig& cfg) {
    if (cfg.max_tokens < 1) throw Error("max_tokens must be >= 1");
    {
        std::string text;
        for (const auto& token : prompt) {
            text += token;
            text += '\n';
        }
        try {
            parse_song_prefix(text);
        } catch (const Error& e) {
            throw InvalidPromptError("prompt is not a valid song prefix: " +
                                     std::string(e.what()));
        }
    }

    const Vocabulary& vocab = model.vocabulary();
    std::vector<std::string> out(prompt.begin(), prompt.end());
    std::vector<int> ids;
    ids.reserve(prompt.size() + static_cast<size_t>(cfg.max_tokens));
    for (const auto& text : prompt) ids.push_back(vocab.id_of(text));

    std::mt19937_64 rng(cfg.rng_seed);
    for (int produced = 0; produced < cfg.max_tokens; ++produced) {
        const std::vector<double> dist = model.next_distribution(ids);
        const auto kept = top_k_temperature(dist, cfg.top_k, cfg.temperature);

        const double u = uniform_unit(rng);
        double cumulative = 0;
        int chosen = kept.back().first;
        for (const auto& [id, p] : kept) {
            cumulative += p;
            if (u < cumulative) {
                chosen = id;
                break;
            }
        }

        ids.push_back(chosen);
        out.push_back(vocab.text_of(chosen));
        if (out.back() == "end") break;
    }
    return out;
}

}  // namespace lm
}  // namespace tabgen
