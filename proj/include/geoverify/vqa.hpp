#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geoverify/csv.hpp"
#include "geoverify/error.hpp"

namespace geoverify::vqa {

enum class QuestionType { open, closed };

struct VqaItem {
    std::string question_id;
    QuestionType type = QuestionType::closed;
    std::string prediction;
    std::string ground_truth;
};

namespace detail {

inline bool is_space(unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); }

// Bytes >= 0x80 belong to UTF-8 sequences and are kept as word characters.
inline bool is_word(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

inline bool is_terminal_punct(unsigned char c) {
    return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':';
}

inline char fold(unsigned char c) { return static_cast<char>(c < 0x80 ? std::tolower(c) : c); }

}  // namespace detail

/// Case-folded, trimmed, internal whitespace collapsed to one space and
/// trailing punctuation removed.
inline std::string normalize_answer(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : text) {
        if (detail::is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(detail::fold(c));
    }
    while (!out.empty() && (detail::is_terminal_punct(static_cast<unsigned char>(out.back())) ||
                            detail::is_space(static_cast<unsigned char>(out.back()))))
        out.pop_back();
    return out;
}

/// Lower-cased alphanumeric runs.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (detail::is_word(c)) {
            cur.push_back(detail::fold(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

inline bool closed_match(std::string_view prediction, std::string_view ground_truth) {
    return normalize_answer(prediction) == normalize_answer(ground_truth);
}

/// Fraction of closed items whose normalized prediction equals the normalized
/// ground truth.
inline double closed_accuracy(std::span<const VqaItem> items) {
    if (items.empty()) throw Error(ErrorKind::EmptySet, "no closed questions to score");
    std::size_t correct = 0;
    for (const VqaItem& item : items) {
        if (item.type != QuestionType::closed)
            throw Error(ErrorKind::WrongQuestionType,
                        "question " + item.question_id + " is open, expected closed");
        if (closed_match(item.prediction, item.ground_truth)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(items.size());
}

/// |unique truth tokens found among prediction tokens| / |unique truth tokens|
inline double open_token_recall(std::string_view prediction, std::string_view ground_truth) {
    const auto truth = tokenize(ground_truth);
    if (truth.empty())
        throw Error(ErrorKind::EmptyGroundTruth, "ground truth has no tokens");
    const std::set<std::string> want(truth.begin(), truth.end());
    const auto pred = tokenize(prediction);
    const std::set<std::string> have(pred.begin(), pred.end());
    std::size_t hit = 0;
    for (const auto& t : want) hit += have.count(t);
    return static_cast<double>(hit) / static_cast<double>(want.size());
}

struct VqaScores {
    std::optional<double> closed_accuracy;
    std::size_t n_closed = 0;
    std::optional<double> open_recall;  // mean over open items
    std::size_t n_open = 0;
};

inline VqaScores score(std::span<const VqaItem> items) {
    VqaScores s;
    std::vector<VqaItem> closed;
    double recall_sum = 0.0;
    for (const VqaItem& item : items) {
        if (item.type == QuestionType::closed) {
            closed.push_back(item);
        } else {
            recall_sum += open_token_recall(item.prediction, item.ground_truth);
            ++s.n_open;
        }
    }
    s.n_closed = closed.size();
    if (!closed.empty()) s.closed_accuracy = closed_accuracy(closed);
    if (s.n_open > 0) s.open_recall = recall_sum / static_cast<double>(s.n_open);
    return s;
}

/// Reads question_id,type,prediction,ground_truth.
inline std::vector<VqaItem> read_items(const std::filesystem::path& path) {
    const csv::Table t = csv::read_table(path);
    const std::size_t c_id = t.column("question_id");
    const std::size_t c_type = t.column("type");
    const std::size_t c_pred = t.column("prediction");
    const std::size_t c_truth = t.column("ground_truth");
    std::vector<VqaItem> items;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& f = t.rows[r];
        const std::size_t row = t.line_numbers[r];
        VqaItem item;
        item.question_id = f[c_id];
        const std::string type = normalize_answer(f[c_type]);
        if (type == "open") item.type = QuestionType::open;
        else if (type == "closed") item.type = QuestionType::closed;
        else throw ParseError(row, "type must be open or closed, got '" + f[c_type] + "'");
        item.prediction = f[c_pred];
        item.ground_truth = f[c_truth];
        if (normalize_answer(item.ground_truth).empty()) throw ParseError(row, "empty ground_truth");
        items.push_back(std::move(item));
    }
    return items;
}

}  // namespace geoverify::vqa
