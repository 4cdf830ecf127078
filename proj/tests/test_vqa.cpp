#include <gtest/gtest.h>

#include "support.hpp"

using namespace gvtest;
using geoverify::vqa::QuestionType;
using geoverify::vqa::VqaItem;

namespace {

struct HandScored {
    std::vector<VqaItem> items;
    std::vector<double> expected;
};

double parse_fraction(const std::string& s) {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return std::stod(s);
    return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

HandScored load_fixture() {
    const fs::path path = fs::path(GEOVERIFY_TEST_DATA) / "vqa_fixture.csv";
    HandScored h;
    h.items = vqa::read_items(path);
    const csv::Table t = csv::read_table(path);
    for (const auto& row : t.rows) h.expected.push_back(parse_fraction(row[t.column("expected")]));
    return h;
}

VqaItem closed(std::string pred, std::string truth) { return {"q", QuestionType::closed, std::move(pred), std::move(truth)}; }

}  // namespace

TEST(VqaNormalize, Rules) {
    EXPECT_EQ(vqa::normalize_answer("  Left \t  LUNG.  "), "left lung");
    EXPECT_EQ(vqa::normalize_answer("no."), "no");
    EXPECT_EQ(vqa::normalize_answer("what?!"), "what");
    EXPECT_EQ(vqa::normalize_answer("a.b"), "a.b");
    EXPECT_TRUE(vqa::closed_match("Yes", "yes"));
    EXPECT_TRUE(vqa::closed_match("no.", "no"));
    EXPECT_FALSE(vqa::closed_match("left", "right"));
}

TEST(VqaTokenize, SplitsOnNonAlnum) {
    EXPECT_EQ(vqa::tokenize("Left-sided, 2 lesions"), (std::vector<std::string>{"left", "sided", "2", "lesions"}));
    EXPECT_EQ(vqa::tokenize("café"), (std::vector<std::string>{"café"}));
    EXPECT_TRUE(vqa::tokenize("  ...  ").empty());
}

TEST(VqaClosed, TwoOfThree) {
    const std::vector<VqaItem> items{closed("yes", "yes"), closed("no", "yes"), closed("No.", "no")};
    EXPECT_DOUBLE_EQ(vqa::closed_accuracy(items), 2.0 / 3.0);
}

TEST(VqaClosed, ErrorsAndSelfScore) {
    EXPECT_THROW(vqa::closed_accuracy(std::span<const VqaItem>{}), Error);
    const std::vector<VqaItem> open{{"q", QuestionType::open, "a", "a"}};
    try {
        vqa::closed_accuracy(open);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::WrongQuestionType);
    }
    const HandScored h = load_fixture();
    std::vector<VqaItem> self;
    for (const VqaItem& it : h.items)
        if (it.type == QuestionType::closed) self.push_back({it.question_id, it.type, it.ground_truth, it.ground_truth});
    EXPECT_EQ(vqa::closed_accuracy(self), 1.0);
}

TEST(VqaOpen, HandValues) {
    EXPECT_EQ(vqa::open_token_recall("left lower lobe is clear", "left lower lobe"), 1.0);
    EXPECT_EQ(vqa::open_token_recall("apple", "banana split"), 0.0);
    EXPECT_EQ(vqa::open_token_recall("the left lobe", "left lower lobe"), 2.0 / 3.0);
    try {
        vqa::open_token_recall("x", " ,. ");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyGroundTruth);
    }
}

TEST(VqaOpen, AppendingNeverLowersRecall) {
    auto g = rng(50);
    const std::vector<std::string> vocab{"left", "right", "lobe", "lower", "upper", "mass", "the", "no", "effusion", "Liver"};
    auto sentence = [&](std::size_t n) {
        std::string s;
        for (std::size_t k = 0; k < n; ++k) s += vocab[pick(g, 0, vocab.size() - 1)] + (pick(g, 0, 3) ? " " : ", ");
        return s;
    };
    for (int trial = 0; trial < 500; ++trial) {
        const std::string truth = sentence(pick(g, 1, 5));
        std::string pred = sentence(pick(g, 0, 4));
        double prev = vqa::open_token_recall(pred, truth);
        for (int k = 0; k < 4; ++k) {
            pred += " " + sentence(pick(g, 1, 3));
            const double next = vqa::open_token_recall(pred, truth);
            ASSERT_GE(next, prev);
            prev = next;
        }
    }
}

TEST(VqaBoth, WhitespaceInPredictionDoesNotMatter) {
    const HandScored h = load_fixture();
    std::vector<VqaItem> spaced = h.items;
    for (VqaItem& it : spaced) {
        std::string s = "  ";
        for (char c : it.prediction) s += c == ' ' ? std::string(" \t  ") : std::string(1, c);
        it.prediction = s + "\t ";
    }
    const auto a = vqa::score(h.items);
    const auto b = vqa::score(spaced);
    EXPECT_EQ(*a.closed_accuracy, *b.closed_accuracy);
    EXPECT_EQ(*a.open_recall, *b.open_recall);
}

TEST(VqaFixture, ReproducesHandScores) {
    const HandScored h = load_fixture();
    ASSERT_EQ(h.items.size(), 30u);
    double closed_sum = 0.0, open_sum = 0.0;
    std::size_t n_closed = 0, n_open = 0;
    for (std::size_t k = 0; k < h.items.size(); ++k) {
        const VqaItem& it = h.items[k];
        if (it.type == QuestionType::closed) {
            EXPECT_EQ(vqa::closed_match(it.prediction, it.ground_truth) ? 1.0 : 0.0, h.expected[k]) << it.question_id;
            closed_sum += h.expected[k];
            ++n_closed;
        } else {
            EXPECT_EQ(vqa::open_token_recall(it.prediction, it.ground_truth), h.expected[k]) << it.question_id;
            open_sum += h.expected[k];
            ++n_open;
        }
    }
    const auto s = vqa::score(h.items);
    EXPECT_EQ(s.n_closed, 15u);
    EXPECT_EQ(s.n_open, 15u);
    EXPECT_EQ(*s.closed_accuracy, closed_sum / static_cast<double>(n_closed));
    EXPECT_EQ(*s.open_recall, open_sum / static_cast<double>(n_open));
    EXPECT_DOUBLE_EQ(*s.closed_accuracy, 0.6);
    EXPECT_NEAR(*s.open_recall, 113.0 / 180.0, 1e-15);
}
