#include "pbvote/prompting.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pbvote/errors.hpp"

namespace pbvote {
namespace {

const std::string kMethodCodes[] = {"appr", "kapp", "cumu", "rank"};

std::string replace_all(std::string text, const std::string& needle,
                        const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::optional<std::string> read_file_if_exists(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

bool operator==(const VotingMethod& a, const VotingMethod& b) {
  return a.kind == b.kind && a.k == b.k && a.points == b.points;
}

const std::string& method_code(const VotingMethod& m) {
  return kMethodCodes[static_cast<int>(m.kind)];
}

VotingMethod parse_method(const std::string& code) {
  for (int i = 0; i < 4; ++i)
    if (code == kMethodCodes[i]) return VotingMethod{static_cast<VotingMethod::Kind>(i)};
  throw Error(Errc::BadEnumValue, "unknown method '" + code + "' (appr|kapp|cumu|rank)");
}

std::string voting_instruction(const VotingMethod& method) {
  switch (method.kind) {
    case VotingMethod::Kind::Approval:
      return "Select any number of projects. Here, in this vote, you can select all the "
             "projects you approve of.";
    case VotingMethod::Kind::KApproval:
      return "Select exactly " + std::to_string(method.k) + " projects.";
    case VotingMethod::Kind::Cumulative:
      return "Distribute " + std::to_string(method.points) +
             " points among the projects you like. List the projects and the points you "
             "allocate, separated by a colon.";
    case VotingMethod::Kind::Ranked:
      return "Select " + std::to_string(method.k) +
             " projects and rank them from the most preferred to the " +
             std::to_string(method.k) + "th most preferred.";
  }
  throw Error(Errc::BadEnumValue, "bad method enum");
}

PromptTemplates default_templates() {
  PromptTemplates t;
  t.initial_context =
      "You are a university student living in Zurich. The city is running a participatory "
      "budgeting program that will allocate a budget of CHF 60000 across 24 proposed urban "
      "projects. Every project belongs to one district (Nord, Süd, Ost, West) and one urban "
      "category (Nature, Culture, Transportation), and costs either 5000 or 10000 CHF. You "
      "will be asked to cast a vote on these projects.\n\n{persona}";
  t.voting_prompt =
      "{instruction}\n\n{project_table}\nRespond with the project IDs prefixed by '#'.";
  t.cot_prompt =
      "Before seeing the projects, describe in a short paragraph what kinds of urban "
      "projects you would favor in a participatory budgeting program and why.";
  return t;
}

PromptTemplates load_templates(const std::string& dir) {
  PromptTemplates t = default_templates();
  std::filesystem::path base(dir);
  if (auto s = read_file_if_exists(base / "initial_context.txt")) t.initial_context = *s;
  if (auto s = read_file_if_exists(base / "voting_prompt.txt")) t.voting_prompt = *s;
  if (auto s = read_file_if_exists(base / "cot_prompt.txt")) t.cot_prompt = *s;
  return t;
}

PromptBundle assemble(const PromptTemplates& templates,
                      const std::optional<PersonaText>& persona,
                      const VotingMethod& method,
                      const PresentedList& list,
                      bool cot) {
  if (trim(templates.initial_context).empty())
    throw Error(Errc::SchemaError, "initial context template is empty");

  std::string context;
  if (templates.initial_context.find("{persona}") != std::string::npos) {
    context = replace_all(templates.initial_context, "{persona}",
                          persona ? persona->text : "");
  } else {
    context = templates.initial_context;
    if (persona) context += "\n\n" + persona->text;
  }
  context = trim(context);

  std::string voting = replace_all(templates.voting_prompt, "{instruction}",
                                   voting_instruction(method));
  voting = trim(replace_all(voting, "{project_table}", render_project_table(list)));

  PromptBundle bundle;
  bundle.method = method;
  bundle.treatment = list.treatment;
  bundle.persona_used = persona.has_value();
  bundle.cot_used = cot;
  bundle.turns.push_back({Role::System, context});
  if (cot) bundle.turns.push_back({Role::User, trim(templates.cot_prompt)});
  bundle.turns.push_back({Role::User, voting});
  return bundle;
}

}  // namespace pbvote
