#pragma once

#include <array>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "pbvote/catalog.hpp"

namespace pbvote {

// Survey naming: "Transport" (the catalog side calls it "Transportation").
enum class UrbanTopic { Transport, Nature, Culture };

const std::string& to_string(UrbanTopic t);
UrbanTopic parse_topic(const std::string& text);  // accepts "Transportation" for Transport
Category topic_to_category(UrbanTopic t);

struct TopicScore {
  UrbanTopic topic = UrbanTopic::Transport;
  int score = 0;  // 0..100
};

struct SurveyRecord {
  std::string participant_id;
  std::array<TopicScore, 3> topics{};  // survey order (1st, 2nd, 3rd); scores sum to 100
  District district = District::Nord;
  std::string connectedness;       // carried, not rendered
  std::string district_importance;
  std::string category_importance;
  std::string cost_importance;
  std::string likelihood_importance;  // carried, not rendered
};

struct PersonaText {
  std::string participant_id;
  std::string text;
};

/// score > 50 -> "have a strong preference for <category>";
/// 33 <= score <= 50 -> "prefer <category>"; below 33 -> no phrase.
std::optional<std::string> preference_phrase(const std::string& category, int score);

PersonaText build_persona(const SurveyRecord& record);

/// Highest-scored topic; ties broken in catalog category order
/// (Nature, Culture, Transportation).
UrbanTopic top_topic(const SurveyRecord& record);

std::vector<SurveyRecord> load_survey(std::istream& source);
std::vector<SurveyRecord> load_survey_file(const std::string& path);

}  // namespace pbvote
