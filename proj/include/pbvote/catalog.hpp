#pragma once

#include <array>
#include <istream>
#include <set>
#include <string>
#include <vector>

namespace pbvote {

inline constexpr int kCatalogSize = 24;

enum class District { Nord, Sued, Ost, West };
enum class Category { Nature, Culture, Transportation };

const std::string& to_string(District d);
const std::string& to_string(Category c);
District parse_district(const std::string& text);
Category parse_category(const std::string& text);

struct Project {
  int id = 0;  // canonical ballot id, 1..24
  std::string name;
  District district = District::Nord;
  Category category = Category::Nature;
  int cost = 5000;  // CHF, 5000 or 10000
};

/// The 24-project ballot universe. List order is the presentation order
/// shown to voters; exactly one project exists per
/// (district x category x cost) combination.
struct ProjectCatalog {
  std::vector<Project> projects;

  const Project& by_id(int canonical_id) const;
};

enum class ListTreatment { Original, ReversedOrder, ReversedIds };

const std::string& to_string(ListTreatment t);
ListTreatment parse_treatment(const std::string& code);  // orig|revorder|revid

/// A catalog as shown to one voter: row order and displayed ids depend on
/// the treatment, and id_map carries displayed -> canonical for parsing.
struct PresentedList {
  struct Row {
    int displayed_id = 0;
    Project project;
  };

  std::vector<Row> rows;
  ListTreatment treatment = ListTreatment::Original;
  std::array<int, kCatalogSize + 1> to_canonical{};  // indexed by displayed id

  int map_back_one(int displayed_id) const;  // throws UnknownDisplayedId
  int displayed_for(int canonical_id) const;
};

ProjectCatalog load_catalog(std::istream& source);
ProjectCatalog load_catalog_file(const std::string& path);
// Skips the 24/factorial invariants (for catalogs of other sizes); ids must
// still be unique and positive.
ProjectCatalog load_catalog_unchecked(std::istream& source);

PresentedList apply_list_treatment(const ProjectCatalog& catalog, ListTreatment treatment);
std::set<int> map_back(const std::set<int>& displayed_ids, const PresentedList& list);

// One line per row: "#<displayed_id> <Name> (<District>, <Category>, <Cost>)".
std::string render_project_table(const PresentedList& list);

}  // namespace pbvote
