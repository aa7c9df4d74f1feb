#include "pbvote/persona.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "pbvote/csv.hpp"
#include "pbvote/errors.hpp"

namespace pbvote {
namespace {

const std::string kTopicNames[] = {"Transport", "Nature", "Culture"};

std::string ascii_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Tie order for equal scores follows the catalog category order.
int catalog_order(UrbanTopic t) {
  switch (t) {
    case UrbanTopic::Nature: return 0;
    case UrbanTopic::Culture: return 1;
    case UrbanTopic::Transport: return 2;
  }
  return 3;
}

void validate_scores(const SurveyRecord& record) {
  int sum = 0;
  for (const auto& ts : record.topics) {
    if (ts.score < 0 || ts.score > 100)
      throw Error(Errc::InvalidScoreSum,
                  "score " + std::to_string(ts.score) + " outside 0..100 for participant " +
                      record.participant_id);
    sum += ts.score;
  }
  if (sum != 100)
    throw Error(Errc::InvalidScoreSum, "scores sum to " + std::to_string(sum) +
                                           ", want 100 (participant " + record.participant_id +
                                           ")");
  bool seen[3] = {};
  for (const auto& ts : record.topics) {
    int i = static_cast<int>(ts.topic);
    if (seen[i])
      throw Error(Errc::InvalidScoreSum,
                  "topic " + kTopicNames[i] + " listed twice for participant " +
                      record.participant_id);
    seen[i] = true;
  }
}

}  // namespace

const std::string& to_string(UrbanTopic t) { return kTopicNames[static_cast<int>(t)]; }

UrbanTopic parse_topic(const std::string& text) {
  std::string low = ascii_lower(text);
  if (low == "transport" || low == "transportation") return UrbanTopic::Transport;
  if (low == "nature") return UrbanTopic::Nature;
  if (low == "culture") return UrbanTopic::Culture;
  throw Error(Errc::BadEnumValue, "unknown urban topic '" + text + "'");
}

Category topic_to_category(UrbanTopic t) {
  switch (t) {
    case UrbanTopic::Transport: return Category::Transportation;
    case UrbanTopic::Nature: return Category::Nature;
    case UrbanTopic::Culture: return Category::Culture;
  }
  throw Error(Errc::BadEnumValue, "bad topic enum");
}

std::optional<std::string> preference_phrase(const std::string& category, int score) {
  if (score > 50) return "have a strong preference for " + category;
  if (score >= 33) return "prefer " + category;
  return std::nullopt;
}

UrbanTopic top_topic(const SurveyRecord& record) {
  auto topics = record.topics;
  std::stable_sort(topics.begin(), topics.end(), [](const TopicScore& a, const TopicScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return catalog_order(a.topic) < catalog_order(b.topic);
  });
  return topics[0].topic;
}

PersonaText build_persona(const SurveyRecord& record) {
  validate_scores(record);

  auto topics = record.topics;
  std::stable_sort(topics.begin(), topics.end(), [](const TopicScore& a, const TopicScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return catalog_order(a.topic) < catalog_order(b.topic);
  });

  std::vector<std::string> phrases;
  for (const auto& ts : topics) {
    if (auto phrase = preference_phrase(ascii_lower(to_string(ts.topic)), ts.score))
      phrases.push_back(*phrase);
  }
  // All scores below 33 cannot sum to 100, so at least one phrase exists.
  if (phrases.empty())
    throw Error(Errc::InvalidScoreSum,
                "no qualifying category despite scores summing to 100 (participant " +
                    record.participant_id + ")");

  std::string topic_sentence = "In urban topics, you ";
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    if (i) topic_sentence += " and ";
    topic_sentence += phrases[i];
  }
  topic_sentence += ".";

  std::string text = "You are a university student from " + to_string(record.district) +
                     " district in Zurich. " + topic_sentence +
                     " When deciding on projects, you find the district to be " +
                     ascii_lower(record.district_importance) + ", the urban category " +
                     ascii_lower(record.category_importance) + ", and the cost of the project " +
                     ascii_lower(record.cost_importance) + ".";
  return PersonaText{record.participant_id, text};
}

std::vector<SurveyRecord> load_survey(std::istream& source) {
  auto records = csv::read_records(source);
  if (records.empty()) throw Error(Errc::SchemaError, "empty survey source");

  std::size_t first = 0;
  if (!records[0].empty() && records[0][0] == "id") first = 1;

  std::vector<SurveyRecord> survey;
  for (std::size_t r = first; r < records.size(); ++r) {
    const auto& row = records[r];
    if (row.size() != 13)
      throw Error(Errc::SchemaError, "survey row " + std::to_string(r + 1) + " has " +
                                         std::to_string(row.size()) + " fields, want 13");
    SurveyRecord rec;
    rec.participant_id = row[0];
    for (int t = 0; t < 3; ++t) {
      rec.topics[t].topic = parse_topic(row[1 + 2 * t]);
      try {
        rec.topics[t].score = std::stoi(row[2 + 2 * t]);
      } catch (const std::exception&) {
        throw Error(Errc::SchemaError, "bad score '" + row[2 + 2 * t] + "' in survey row " +
                                           std::to_string(r + 1));
      }
    }
    rec.district = parse_district(row[7]);
    rec.connectedness = row[8];
    rec.district_importance = row[9];
    rec.category_importance = row[10];
    rec.cost_importance = row[11];
    rec.likelihood_importance = row[12];
    validate_scores(rec);
    survey.push_back(std::move(rec));
  }
  return survey;
}

std::vector<SurveyRecord> load_survey_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::SchemaError, "cannot open survey file " + path);
  return load_survey(in);
}

}  // namespace pbvote
