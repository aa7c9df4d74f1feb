#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pbvote/catalog.hpp"
#include "pbvote/persona.hpp"

namespace pbvote {

struct VotingMethod {
  enum class Kind { Approval, KApproval, Cumulative, Ranked };

  Kind kind = Kind::KApproval;
  int k = 5;        // selections for KApproval, depth for Ranked
  int points = 10;  // budget for Cumulative
};

bool operator==(const VotingMethod& a, const VotingMethod& b);

const std::string& method_code(const VotingMethod& m);  // appr|kapp|cumu|rank
VotingMethod parse_method(const std::string& code);

enum class Role { System, User };

struct PromptTurn {
  Role role = Role::User;
  std::string text;
};

struct PromptBundle {
  std::vector<PromptTurn> turns;  // initial context first, voting turn last
  VotingMethod method;
  ListTreatment treatment = ListTreatment::Original;
  bool persona_used = false;
  bool cot_used = false;
};

/// The per-method instruction text, verbatim.
std::string voting_instruction(const VotingMethod& method);

// Template placeholders: {persona} in initial_context, {instruction} and
// {project_table} in voting_prompt. The cot_prompt must not contain the
// project table.
struct PromptTemplates {
  std::string initial_context;
  std::string voting_prompt;
  std::string cot_prompt;
};

PromptTemplates default_templates();
// Reads initial_context.txt, voting_prompt.txt, cot_prompt.txt from dir;
// missing files fall back to the defaults.
PromptTemplates load_templates(const std::string& dir);

PromptBundle assemble(const PromptTemplates& templates,
                      const std::optional<PersonaText>& persona,
                      const VotingMethod& method,
                      const PresentedList& list,
                      bool cot);

}  // namespace pbvote
