#include "pbvote/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "pbvote/csv.hpp"
#include "pbvote/errors.hpp"

namespace pbvote {
namespace {

const std::string kDistrictNames[] = {"Nord", "Süd", "Ost", "West"};
const std::string kCategoryNames[] = {"Nature", "Culture", "Transportation"};
const std::string kTreatmentNames[] = {"orig", "revorder", "revid"};

}  // namespace

const std::string& to_string(District d) { return kDistrictNames[static_cast<int>(d)]; }
const std::string& to_string(Category c) { return kCategoryNames[static_cast<int>(c)]; }
const std::string& to_string(ListTreatment t) { return kTreatmentNames[static_cast<int>(t)]; }

District parse_district(const std::string& text) {
  for (int i = 0; i < 4; ++i)
    if (text == kDistrictNames[i]) return static_cast<District>(i);
  throw Error(Errc::BadEnumValue, "unknown district '" + text + "'");
}

Category parse_category(const std::string& text) {
  for (int i = 0; i < 3; ++i)
    if (text == kCategoryNames[i]) return static_cast<Category>(i);
  throw Error(Errc::BadEnumValue, "unknown category '" + text + "'");
}

ListTreatment parse_treatment(const std::string& code) {
  for (int i = 0; i < 3; ++i)
    if (code == kTreatmentNames[i]) return static_cast<ListTreatment>(i);
  throw Error(Errc::BadEnumValue, "unknown treatment '" + code + "' (orig|revorder|revid)");
}

const Project& ProjectCatalog::by_id(int canonical_id) const {
  for (const auto& p : projects)
    if (p.id == canonical_id) return p;
  throw Error(Errc::UnknownProjectId, "no project with id " + std::to_string(canonical_id));
}

namespace {

std::vector<Project> parse_rows(std::istream& source, bool checked) {
  auto records = csv::read_records(source);
  if (records.empty()) throw Error(Errc::MissingCombination, "empty catalog source");

  std::size_t first = 0;
  if (!records[0].empty() && records[0][0] == "id") first = 1;  // header

  std::vector<Project> projects;
  std::map<int, bool> seen;
  for (std::size_t r = first; r < records.size(); ++r) {
    const auto& row = records[r];
    if (row.size() != 5)
      throw Error(Errc::BadEnumValue,
                  "catalog row " + std::to_string(r + 1) + " has " +
                      std::to_string(row.size()) + " fields, want 5");
    Project p;
    try {
      p.id = std::stoi(row[0]);
    } catch (const std::exception&) {
      throw Error(Errc::BadEnumValue, "bad id '" + row[0] + "'");
    }
    p.name = row[1];
    p.district = parse_district(row[2]);
    p.category = parse_category(row[3]);
    try {
      p.cost = std::stoi(row[4]);
    } catch (const std::exception&) {
      throw Error(Errc::BadEnumValue, "bad cost '" + row[4] + "'");
    }
    if (p.cost != 5000 && p.cost != 10000)
      throw Error(Errc::BadEnumValue, "cost must be 5000 or 10000, got " + row[4]);
    if (p.id < 1 || (checked && p.id > kCatalogSize))
      throw Error(Errc::BadEnumValue, "id out of range: " + row[0]);
    if (seen[p.id]) throw Error(Errc::DuplicateId, "id " + row[0] + " appears twice");
    seen[p.id] = true;
    projects.push_back(std::move(p));
  }
  return projects;
}

}  // namespace

ProjectCatalog load_catalog(std::istream& source) {
  ProjectCatalog catalog{parse_rows(source, /*checked=*/true)};
  if (catalog.projects.size() != kCatalogSize)
    throw Error(Errc::MissingCombination,
                "expected 24 projects, got " + std::to_string(catalog.projects.size()));
  // exactly one project per district x category x cost triple
  bool combo[4][3][2] = {};
  for (const auto& p : catalog.projects) {
    int d = static_cast<int>(p.district);
    int c = static_cast<int>(p.category);
    int m = p.cost == 5000 ? 0 : 1;
    if (combo[d][c][m])
      throw Error(Errc::MissingCombination,
                  "duplicate combination " + to_string(p.district) + "/" +
                      to_string(p.category) + "/" + std::to_string(p.cost));
    combo[d][c][m] = true;
  }
  for (int d = 0; d < 4; ++d)
    for (int c = 0; c < 3; ++c)
      for (int m = 0; m < 2; ++m)
        if (!combo[d][c][m])
          throw Error(Errc::MissingCombination,
                      "missing combination " + kDistrictNames[d] + "/" + kCategoryNames[c] +
                          "/" + std::to_string(m == 0 ? 5000 : 10000));
  return catalog;
}

ProjectCatalog load_catalog_unchecked(std::istream& source) {
  return ProjectCatalog{parse_rows(source, /*checked=*/false)};
}

ProjectCatalog load_catalog_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::SchemaError, "cannot open catalog file " + path);
  return load_catalog(in);
}

int PresentedList::map_back_one(int displayed_id) const {
  if (displayed_id < 1 || displayed_id > kCatalogSize || to_canonical[displayed_id] == 0)
    throw Error(Errc::UnknownDisplayedId, "displayed id " + std::to_string(displayed_id));
  return to_canonical[displayed_id];
}

int PresentedList::displayed_for(int canonical_id) const {
  for (const auto& row : rows)
    if (row.project.id == canonical_id) return row.displayed_id;
  throw Error(Errc::UnknownProjectId, "canonical id " + std::to_string(canonical_id));
}

PresentedList apply_list_treatment(const ProjectCatalog& catalog, ListTreatment treatment) {
  PresentedList list;
  list.treatment = treatment;
  list.rows.reserve(catalog.projects.size());
  for (const auto& p : catalog.projects) {
    if (p.id < 1 || p.id > kCatalogSize)
      throw Error(Errc::UnknownProjectId,
                  "treatments require ids 1..24, got " + std::to_string(p.id));
    int displayed = treatment == ListTreatment::ReversedIds ? kCatalogSize + 1 - p.id : p.id;
    list.rows.push_back({displayed, p});
  }
  if (treatment == ListTreatment::ReversedOrder)
    std::reverse(list.rows.begin(), list.rows.end());
  list.to_canonical.fill(0);
  for (const auto& row : list.rows) list.to_canonical[row.displayed_id] = row.project.id;
  return list;
}

std::set<int> map_back(const std::set<int>& displayed_ids, const PresentedList& list) {
  std::set<int> canonical;
  for (int d : displayed_ids) canonical.insert(list.map_back_one(d));
  return canonical;
}

std::string render_project_table(const PresentedList& list) {
  std::ostringstream out;
  for (const auto& row : list.rows) {
    out << '#' << row.displayed_id << ' ' << row.project.name << " ("
        << to_string(row.project.district) << ", " << to_string(row.project.category)
        << ", " << row.project.cost << ")\n";
  }
  return out.str();
}

}  // namespace pbvote
