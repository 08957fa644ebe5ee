#include <doctest.h>

#include <random>

#include "synthetic.hpp"
#include "tabgen/conditioning.hpp"
#include "tabgen/genre_classifier.hpp"
#include "tabgen/ngram.hpp"
#include "tabgen/rng.hpp"

using namespace tabgen;
using namespace tabgen::genre;

namespace {

std::vector<std::pair<Song, GenreId>> labeled_corpus(int n_per_genre, uint64_t seed) {
    std::vector<std::pair<Song, GenreId>> corpus;
    for (auto& item : testkit::make_genre_corpus(n_per_genre, seed)) {
        corpus.emplace_back(std::move(item.song), item.genre);
    }
    return corpus;
}

}  // namespace

TEST_CASE("a separable corpus is classified perfectly") {
    const auto corpus = labeled_corpus(60, 1);
    const TrainResult result = train_classifier(corpus);
    CHECK(result.report.test_accuracy == 1.0);
    CHECK(result.report.validation_accuracy == 1.0);
    CHECK(result.report.n_train + result.report.n_validation + result.report.n_test ==
          static_cast<long>(corpus.size()));
}

TEST_CASE("training data requirements are enforced") {
    std::vector<std::pair<Song, GenreId>> single;
    for (auto& item : testkit::make_genre_corpus(12, 2)) {
        if (item.genre.name == "metal") single.emplace_back(std::move(item.song), item.genre);
    }
    CHECK_THROWS_AS(train_classifier(single), InsufficientClassDataError);

    auto tiny = labeled_corpus(6, 3);  // 6 songs per class, below the 10 minimum
    CHECK_THROWS_AS(train_classifier(tiny), InsufficientClassDataError);
}

TEST_CASE("shuffled labels land at chance accuracy") {
    auto corpus = labeled_corpus(100, 4);
    std::vector<GenreId> labels;
    for (const auto& [song, label] : corpus) labels.push_back(label);
    std::mt19937_64 rng(99);
    deterministic_shuffle(labels, rng);
    for (size_t i = 0; i < corpus.size(); ++i) corpus[i].second = labels[i];

    const TrainResult result = train_classifier(corpus);
    // Binomial 99% band around 0.2 with n_test = 50.
    const double n_test = static_cast<double>(result.report.n_test);
    const double band = 2.576 * std::sqrt(0.2 * 0.8 / n_test);
    CHECK(result.report.test_accuracy > 0.2 - band);
    CHECK(result.report.test_accuracy < 0.2 + band);
}

TEST_CASE("scores are a softmax and the argmax is the genre") {
    const auto corpus = labeled_corpus(40, 5);
    const TrainResult result = train_classifier(corpus);

    for (size_t g = 0; g < testkit::genre_names().size(); ++g) {
        // A fresh song of this genre, not from the training set.
        auto fresh = testkit::make_genre_corpus(1, 777 + g)[g];
        const auto scores = result.classifier.classify(fresh.song);
        double sum = 0;
        for (double s : scores) {
            CHECK(s >= 0);
            sum += s;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        const size_t argmax = static_cast<size_t>(
            std::max_element(scores.begin(), scores.end()) - scores.begin());
        CHECK(result.classifier.classes()[argmax].name == fresh.genre.name);
    }
}

TEST_CASE("genre label tokens in the input never leak into the score") {
    const auto corpus = labeled_corpus(40, 6);
    const TrainResult result = train_classifier(corpus);
    const Song song = testkit::make_genre_corpus(1, 1234)[0].song;  // metal

    std::set<GenreId> vocabulary;
    for (const auto& name : testkit::genre_names()) vocabulary.insert(GenreId{name});
    const Song mislabeled = inject_genre_token(song, GenreId{"punk"}, vocabulary);
    CHECK(result.classifier.classify(song) == result.classifier.classify(mislabeled));

    // Also with the label spliced into the body.
    Song body_label = song;
    body_label.tokens.insert(body_label.tokens.begin() +
                                 static_cast<long>(body_label.start_index) + 2,
                             GenreDeclToken{GenreId{"punk"}});
    body_label = song_from_tokens(std::move(body_label.tokens));
    CHECK(result.classifier.classify(song) == result.classifier.classify(body_label));
}

TEST_CASE("a song of unseen opaque tokens scores near-uniform") {
    // Balanced classes: same song shape, disjoint alphabets. With equal
    // class totals, unseen evidence cancels and only smoothing remains.
    std::vector<std::pair<Song, GenreId>> corpus;
    for (size_t g = 0; g < testkit::genre_names().size(); ++g) {
        for (int i = 0; i < 12; ++i) {
            std::string body;
            for (int k = 0; k < 8; ++k) {
                body += "distorted0:note:s6:f" + std::to_string(2 * g + (k + i) % 2) +
                        " wait:480 ";
            }
            corpus.emplace_back(parse_song("artist:x downtune:0 tempo:120 start " + body),
                                GenreId{testkit::genre_names()[g]});
        }
    }
    const TrainResult result = train_classifier(corpus);
    const Song opaque = parse_song(
        "artist:x downtune:0 tempo:120 start zzz:unknown:1 zzz:unknown:2 zzz:unknown:3");
    const auto scores = result.classifier.classify(opaque);
    for (double s : scores) CHECK(s == doctest::Approx(0.2).epsilon(0.02));
}

TEST_CASE("classify rejects songs with nothing to score") {
    const auto corpus = labeled_corpus(40, 8);
    const TrainResult result = train_classifier(corpus);
    const Song empty = parse_song("artist:x downtune:0 tempo:120 genre:rock start");
    CHECK_THROWS_AS(result.classifier.classify(empty), EmptyBodyError);
}

TEST_CASE("batch scoring averages per cell and ignores batch order") {
    const auto corpus = labeled_corpus(40, 9);
    const TrainResult result = train_classifier(corpus);

    std::vector<std::tuple<GenreId, std::string, Song>> batch;
    for (size_t g = 0; g < 3; ++g) {
        for (int i = 0; i < 4; ++i) {
            auto item = testkit::make_genre_corpus(4, 320 + g)[g * 4 + static_cast<size_t>(i)];
            batch.emplace_back(item.genre, i % 2 == 0 ? "full" : "empty", item.song);
        }
    }
    auto rows = score_generation_batch(result.classifier, batch);
    std::reverse(batch.begin(), batch.end());
    auto reversed_rows = score_generation_batch(result.classifier, batch);
    REQUIRE(rows.size() == reversed_rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].intended == reversed_rows[i].intended);
        CHECK(rows[i].prompt_mode == reversed_rows[i].prompt_mode);
        CHECK(rows[i].mean_scores == reversed_rows[i].mean_scores);
    }

    // A batch of identical songs means the mean equals the single score.
    const Song song = testkit::make_genre_corpus(1, 55)[2].song;
    std::vector<std::tuple<GenreId, std::string, Song>> constant = {
        {GenreId{"punk"}, "full", song},
        {GenreId{"punk"}, "full", song},
        {GenreId{"punk"}, "full", song}};
    const auto constant_rows = score_generation_batch(result.classifier, constant);
    REQUIRE(constant_rows.size() == 1);
    const auto single = result.classifier.classify(song);
    for (size_t c = 0; c < single.size(); ++c) {
        CHECK(constant_rows[0].mean_scores[c] == doctest::Approx(single[c]).epsilon(1e-12));
    }

    CHECK_THROWS_AS(score_generation_batch(result.classifier, {}), EmptyBatchError);
}

TEST_CASE("conditioned generations score higher on the intended genre than unconditioned") {
    const auto labeled = testkit::make_genre_corpus(40, 10);
    std::vector<Song> songs;
    for (const auto& item : labeled) songs.push_back(item.song);
    const auto model = lm::NgramModel::train(testkit::token_texts(songs), 8);

    std::vector<std::pair<Song, GenreId>> training;
    for (const auto& item : labeled) training.emplace_back(item.song, item.genre);
    const TrainResult clf = train_classifier(training);

    double conditioned_total = 0, unconditioned_total = 0;
    long n = 0;
    for (size_t g = 0; g < testkit::genre_names().size(); ++g) {
        std::vector<Song> genre_songs;
        for (const auto& item : labeled) {
            if (item.genre.name == testkit::genre_names()[g]) {
                genre_songs.push_back(item.song);
            }
        }
        const auto snippets = sample_seed_snippets(genre_songs, 3, 100 + g);
        const size_t class_index = static_cast<size_t>(
            std::find_if(clf.classifier.classes().begin(), clf.classifier.classes().end(),
                         [&](const GenreId& c) { return c.name == testkit::genre_names()[g]; }) -
            clf.classifier.classes().begin());

        for (size_t s = 0; s < snippets.size(); ++s) {
            for (PromptMode mode : {PromptMode::full, PromptMode::unconditional}) {
                PromptSpec spec;
                spec.mode = mode;
                spec.genre_target = GenrePromptTarget{GenreId{testkit::genre_names()[g]},
                                                      snippets[s]};
                const auto prompt = build_genre_prompt(spec);
                std::vector<std::string> prompt_texts;
                for (const Token& token : prompt) {
                    prompt_texts.push_back(serialize_token(token));
                }
                lm::GenerationConfig cfg;
                cfg.top_k = 2;
                cfg.max_tokens = 200;
                cfg.rng_seed = mix_seed(3000 + g, s);
                const auto out = lm::sample(model, prompt_texts, cfg);
                std::string text;
                for (const auto& token : out) text += token + "\n";
                const auto scores = clf.classifier.classify(parse_song(text));
                if (mode == PromptMode::full) {
                    conditioned_total += scores[class_index];
                } else {
                    unconditioned_total += scores[class_index];
                }
                ++n;
            }
        }
    }
    CHECK(conditioned_total / n > unconditioned_total / n);
}
