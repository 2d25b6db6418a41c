#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace cmsent {

/// The three target labels. The numeric order is the fixed class order used
/// everywhere: probability triples, serialized artifacts and tie-breaking.
enum class SentimentClass : int { Negative = 0, Neutral = 1, Positive = 2 };

inline constexpr size_t kNumClasses = 3;

inline constexpr std::array<SentimentClass, kNumClasses> kClassOrder = {
    SentimentClass::Negative, SentimentClass::Neutral, SentimentClass::Positive};

/// Per-class values in the fixed class order (Negative, Neutral, Positive).
using ProbTriple = std::array<double, kNumClasses>;

const char* class_name(SentimentClass c);

/// Case-insensitive label parse. Accepts the class names and the numeric
/// codes -1 (negative), 0 (neutral), 1 (positive) used by common dataset
/// releases. Returns nullopt for anything else.
std::optional<SentimentClass> parse_class_label(std::string_view token);

/// Index of the largest entry; ties go to the lowest index, so the tie order
/// is Negative < Neutral < Positive.
int argmax_class(const ProbTriple& values);

}  // namespace cmsent
