#include <benchmark/benchmark.h>

#include "synthetic.hpp"
#include "tabgen/ngram.hpp"
#include "tabgen/rng.hpp"

namespace {

const tabgen::lm::NgramModel& trained_model() {
    static const auto model = [] {
        const auto labeled = tabgen::testkit::make_genre_corpus(20, 21);
        std::vector<tabgen::Song> songs;
        for (const auto& item : labeled) songs.push_back(item.song);
        return tabgen::lm::NgramModel::train(tabgen::testkit::token_texts(songs), 8);
    }();
    return model;
}

void BM_TrainOrder8(benchmark::State& state) {
    const auto labeled = tabgen::testkit::make_genre_corpus(10, 22);
    std::vector<tabgen::Song> songs;
    for (const auto& item : labeled) songs.push_back(item.song);
    const auto sequences = tabgen::testkit::token_texts(songs);
    for (auto _ : state) {
        benchmark::DoNotOptimize(tabgen::lm::NgramModel::train(sequences, 8));
    }
}
BENCHMARK(BM_TrainOrder8);

void BM_NextDistribution(benchmark::State& state) {
    const auto& model = trained_model();
    const std::vector<int> context = {
        model.vocabulary().id_of("genre:metal"), model.vocabulary().id_of("start"),
        model.vocabulary().id_of("distorted0:note:s5:f10"),
        model.vocabulary().id_of("distorted0:note:s5:f11")};
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.next_distribution(context));
    }
}
BENCHMARK(BM_NextDistribution);

void BM_Sample256Tokens(benchmark::State& state) {
    const auto& model = trained_model();
    const std::vector<std::string> prompt = {"artist:unknown", "downtune:0", "tempo:120",
                                             "genre:metal", "start"};
    uint64_t seed = 0;
    for (auto _ : state) {
        tabgen::lm::GenerationConfig cfg;
        cfg.max_tokens = 256;
        cfg.top_k = 2;
        cfg.rng_seed = seed++;
        benchmark::DoNotOptimize(tabgen::lm::sample(model, prompt, cfg));
    }
}
BENCHMARK(BM_Sample256Tokens);

}  // namespace
