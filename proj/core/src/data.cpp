#include "surveymeld/data.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "surveymeld/adsm.hpp"
#include "surveymeld/csv.hpp"
#include "surveymeld/errors.hpp"

namespace meld {

void AerialDataset::finalize() {
  if (int(surveyed.n_rows) != n_aerial || int(surveyed.n_cols) != n_years)
    throw DataError("aerial: survey mask must be n_aerial x n_years");
  if (int(x_rho.n_rows) != n_aerial)
    throw DataError("aerial: X_rho must have one row per block");
  if (int(x_lambda.n_rows) != n_aerial || int(x_lambda.n_slices) != n_years)
    throw DataError("aerial: X_lambda must be n_aerial x P x n_years");
  if (M < 1) throw ConfigError("aerial: M must be >= 1");
  if (!(nu_d > 0.0)) throw ConfigError("aerial: nu_d must be positive");
  if (!(area_s > 0.0)) throw ConfigError("aerial: surveyed area S must be positive");

  cells.clear();
  cell_index.set_size(n_aerial, n_years);
  cell_index.fill(-1);
  for (int i = 0; i < n_aerial; ++i)
    for (int t = 0; t < n_years; ++t)
      if (surveyed(i, t)) {
        cell_index(i, t) = int(cells.size());
        cells.emplace_back(i, t);
      }

  cell_groups.assign(cells.size(), {});
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const AerialGroup& grp = groups[g];
    if (grp.block < 0 || grp.block >= n_aerial || grp.t < 0 || grp.t >= n_years)
      throw DataError("aerial: group outside the geometry/year range");
    if (cell_index(grp.block, grp.t) < 0)
      throw DataError("aerial: detection recorded in an unsurveyed cell (block row " +
                      std::to_string(grp.block) + ", year " +
                      std::to_string(first_year + grp.t) + ")");
    if (grp.v < 1) throw DataError("aerial: observed groups must have v >= 1");
    if (grp.d < 0.0 || grp.d > nu_d)
      throw DataError("aerial: detection distance outside [0, nu_d]");
    if (grp.side != 0 && grp.side != 1)
      throw DataError("aerial: side must be 0 or 1");
    if (grp.count < 1) throw DataError("aerial: group count must be >= 1");
    if (grp.v > visibility_B(grp.d, grp.side, 1))
      throw DataError("aerial: v exceeds the number of observers the group was visible to");
    cell_groups[cell_index(grp.block, grp.t)].push_back(int(g));
  }

  // M must be adequately large relative to the observed counts.
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (int(cell_groups[c].size()) + 5 > M)
      throw ConfigError("aerial: M = " + std::to_string(M) +
                        " must exceed the max observed group count per cell (" +
                        std::to_string(cell_groups[c].size()) + ") by at least 5");
  }
}

void GroundDataset::finalize() {
  if (int(surveyed.n_rows) != n_ground || int(surveyed.n_cols) != n_years)
    throw DataError("ground: survey mask must be n_ground x n_years");
  if (int(areas.n_elem) != n_ground)
    throw DataError("ground: one site area required per site");
  if (n_ground > 0 && int(w.n_rows) != n_ground)
    throw DataError("ground: covariate cube must have one row per site");
  if (n_ground > 0 && int(w.n_slices) != n_years)
    throw DataError("ground: covariate cube must have one slice per year");

  cells.clear();
  cell_index.set_size(std::max(n_ground, 1), n_years);
  cell_index.fill(-1);
  for (int i = 0; i < n_ground; ++i)
    for (int t = 0; t < n_years; ++t)
      if (surveyed(i, t)) {
        cell_index(i, t) = int(cells.size());
        cells.emplace_back(i, t);
      }

  cell_leks.assign(cells.size(), {});
  for (std::size_t l = 0; l < leks.size(); ++l) {
    const GroundLek& lek = leks[l];
    if (lek.site < 0 || lek.site >= n_ground || lek.t < 0 || lek.t >= n_years)
      throw DataError("ground: lek outside the geometry/year range");
    if (cell_index(lek.site, lek.t) < 0)
      throw DataError("ground: lek recorded in an unsurveyed cell");
    if (lek.counts.empty())
      throw DataError("ground: every lek-year needs at least one visit");
    for (long f : lek.counts)
      if (f < 0) throw DataError("ground: flush counts must be >= 0");
    cell_leks[cell_index(lek.site, lek.t)].push_back(int(l));
  }
}

// --- loaders -------------------------------------------------------------------

std::pair<SurveyGeometry, IdMaps> load_geometry(const std::string& geometry_csv,
                                                const std::string& adjacency_csv) {
  CsvTable t = CsvTable::read_file(geometry_csv);
  struct Row {
    long id;
    double x, y, area;
  };
  std::vector<Row> aerial, ground;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    Row row{t.cell_long(r, "region_id"), t.cell_double(r, "x_m"),
            t.cell_double(r, "y_m"), t.cell_double(r, "area_km2")};
    const std::string& kind = t.cell(r, "kind");
    if (kind == "aerial")
      aerial.push_back(row);
    else if (kind == "ground")
      ground.push_back(row);
    else
      throw DataError("geometry: unknown kind '" + kind + "'");
  }
  auto by_id = [](const Row& a, const Row& b) { return a.id < b.id; };
  std::sort(aerial.begin(), aerial.end(), by_id);
  std::sort(ground.begin(), ground.end(), by_id);

  SurveyGeometry g;
  IdMaps ids;
  g.n_aerial = int(aerial.size());
  g.n_ground = int(ground.size());
  g.centroids.set_size(g.n_regions(), 2);
  g.areas_ground.set_size(g.n_ground);
  for (int i = 0; i < g.n_aerial; ++i) {
    if (ids.aerial_row.count(aerial[i].id))
      throw DataError("geometry: duplicate aerial region_id " + std::to_string(aerial[i].id));
    ids.aerial_ids.push_back(aerial[i].id);
    ids.aerial_row[aerial[i].id] = i;
    g.centroids(i, 0) = aerial[i].x;
    g.centroids(i, 1) = aerial[i].y;
    if (i == 0)
      g.block_area_aerial = aerial[i].area;
    else if (aerial[i].area != g.block_area_aerial)
      throw DataError("geometry: aerial blocks must share one surveyed area");
  }
  for (int s = 0; s < g.n_ground; ++s) {
    if (ids.ground_row.count(ground[s].id) || ids.aerial_row.count(ground[s].id))
      throw DataError("geometry: duplicate region_id " + std::to_string(ground[s].id));
    ids.ground_ids.push_back(ground[s].id);
    ids.ground_row[ground[s].id] = s;
    g.centroids(g.n_aerial + s, 0) = ground[s].x;
    g.centroids(g.n_aerial + s, 1) = ground[s].y;
    g.areas_ground(s) = ground[s].area;
  }

  g.adjacency.zeros(g.n_aerial, g.n_aerial);
  CsvTable adj = CsvTable::read_file(adjacency_csv);
  for (std::size_t r = 0; r < adj.n_rows(); ++r) {
    const long a = adj.cell_long(r, "block_id_a");
    const long b = adj.cell_long(r, "block_id_b");
    const auto ia = ids.aerial_row.find(a);
    const auto ib = ids.aerial_row.find(b);
    if (ia == ids.aerial_row.end() || ib == ids.aerial_row.end())
      throw DataError("adjacency: unknown block id in edge " + std::to_string(a) +
                      "-" + std::to_string(b));
    if (ia->second == ib->second)
      throw DataError("adjacency: self edge on block " + std::to_string(a));
    g.adjacency(ia->second, ib->second) = 1.0;
    g.adjacency(ib->second, ia->second) = 1.0;
  }

  g.validate();
  return {std::move(g), std::move(ids)};
}

CovariateTable load_covariates(const std::string& covariate_csv,
                               const std::string& pdsi_csv,
                               const std::string& overlap_csv,
                               const std::string& division_map_csv,
                               const SurveyGeometry& geometry, const IdMaps& ids) {
  CovariateTable table;
  const int n_aerial = geometry.n_aerial;
  table.ecoregion.assign(n_aerial, "");
  table.static_names = {"development", "crp", "grass_patch", "shrub", "woodland"};
  table.statics.set_size(n_aerial, table.static_names.size());
  table.block_division.assign(n_aerial, -1);

  CsvTable cov = CsvTable::read_file(covariate_csv);
  std::vector<char> filled(n_aerial, 0);
  for (std::size_t r = 0; r < cov.n_rows(); ++r) {
    const long id = cov.cell_long(r, "block_id");
    const auto it = ids.aerial_row.find(id);
    if (it == ids.aerial_row.end())
      throw DataError("covariates: unknown block_id " + std::to_string(id));
    const int row = it->second;
    table.ecoregion[row] = cov.cell(r, "ecoregion");
    for (std::size_t k = 0; k < table.static_names.size(); ++k)
      table.statics(row, k) = cov.cell_double(r, table.static_names[k]);
    filled[row] = 1;
  }
  for (int i = 0; i < n_aerial; ++i)
    if (!filled[i])
      throw DataError("covariates: no row for block_id " +
                      std::to_string(ids.aerial_ids[i]));

  if (division_map_csv.empty()) {
    for (int i = 0; i < n_aerial; ++i) table.block_division[i] = ids.aerial_ids[i];
  } else {
    CsvTable dm = CsvTable::read_file(division_map_csv);
    for (std::size_t r = 0; r < dm.n_rows(); ++r) {
      const long id = dm.cell_long(r, "block_id");
      const auto it = ids.aerial_row.find(id);
      if (it == ids.aerial_row.end())
        throw DataError("division map: unknown block_id " + std::to_string(id));
      table.block_division[it->second] = dm.cell_long(r, "division_id");
    }
    for (int i = 0; i < n_aerial; ++i)
      if (table.block_division[i] < 0)
        throw DataError("division map: no division for block_id " +
                        std::to_string(ids.aerial_ids[i]));
  }

  CsvTable pd = CsvTable::read_file(pdsi_csv);
  for (std::size_t r = 0; r < pd.n_rows(); ++r) {
    table.pdsi[{pd.cell_long(r, "division_id"), int(pd.cell_long(r, "year"))}] =
        pd.cell_double(r, "pdsi");
  }

  table.overlap.assign(geometry.n_ground, {});
  CsvTable ov = CsvTable::read_file(overlap_csv);
  for (std::size_t r = 0; r < ov.n_rows(); ++r) {
    const long site = ov.cell_long(r, "site_id");
    const long block = ov.cell_long(r, "block_id");
    const auto is = ids.ground_row.find(site);
    const auto ib = ids.aerial_row.find(block);
    if (is == ids.ground_row.end())
      throw DataError("overlap: unknown site_id " + std::to_string(site));
    if (ib == ids.aerial_row.end())
      throw DataError("overlap: unknown block_id " + std::to_string(block));
    table.overlap[is->second].emplace_back(ib->second, ov.cell_double(r, "weight"));
  }
  for (int s = 0; s < geometry.n_ground; ++s)
    if (table.overlap[s].empty())
      throw DataError("overlap: site_id " + std::to_string(ids.ground_ids[s]) +
                      " has no overlapping blocks");
  return table;
}

MaskInfo load_mask(const std::string& mask_csv,
                   const std::unordered_map<long, int>& row_of_id, int n_rows) {
  CsvTable t = CsvTable::read_file(mask_csv);
  if (t.n_rows() == 0) throw DataError("mask: empty file " + mask_csv);
  int ymin = 0, ymax = 0;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const int year = int(t.cell_long(r, "year"));
    if (r == 0) {
      ymin = ymax = year;
    } else {
      ymin = std::min(ymin, year);
      ymax = std::max(ymax, year);
    }
  }
  MaskInfo info;
  info.first_year = ymin;
  info.n_years = ymax - ymin + 1;
  info.mask.zeros(n_rows, info.n_years);
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const long id = t.cell_long(r, "region_id");
    const auto it = row_of_id.find(id);
    if (it == row_of_id.end())
      throw DataError("mask: unknown region_id " + std::to_string(id) + " in " +
                      mask_csv);
    const int t_idx = int(t.cell_long(r, "year")) - ymin;
    info.mask(it->second, t_idx) = t.cell_long(r, "surveyed") ? 1 : 0;
  }
  return info;
}

AerialDataset load_aerial(const std::string& detections_csv,
                          const std::string& mask_csv, const IdMaps& ids,
                          const DesignSet& designs, int M, double nu_d,
                          double area_s) {
  AerialDataset data;
  data.n_aerial = int(ids.aerial_ids.size());
  MaskInfo mi = load_mask(mask_csv, ids.aerial_row, data.n_aerial);
  data.surveyed = mi.mask;
  data.first_year = mi.first_year;
  data.n_years = mi.n_years;
  if (designs.first_year != data.first_year || designs.n_years != data.n_years)
    throw DataError("aerial: design year range does not match the survey mask");
  data.M = M;
  data.nu_d = nu_d;
  data.area_s = area_s;
  data.x_rho = designs.x_rho;
  data.x_lambda = designs.aerial_xl;
  data.x_names = designs.xl_names;

  CsvTable det = CsvTable::read_file(detections_csv);
  for (std::size_t r = 0; r < det.n_rows(); ++r) {
    AerialGroup grp;
    const long id = det.cell_long(r, "region_id");
    const auto it = ids.aerial_row.find(id);
    if (it == ids.aerial_row.end())
      throw DataError("detections: unknown region_id " + std::to_string(id));
    grp.block = it->second;
    grp.t = int(det.cell_long(r, "year")) - data.first_year;
    grp.group_id = det.cell_long(r, "group_id");
    grp.v = int(det.cell_long(r, "v"));
    grp.d = det.cell_double(r, "d_m");
    grp.side = int(det.cell_long(r, "side"));
    grp.count = det.cell_long(r, "count");
    data.groups.push_back(grp);
  }
  data.finalize();
  return data;
}

GroundDataset load_ground(const std::string& counts_csv,
                          const std::string& mask_csv, const IdMaps& ids,
                          const SurveyGeometry& geometry, const DesignSet& designs) {
  GroundDataset data;
  data.n_ground = geometry.n_ground;
  MaskInfo mi = load_mask(mask_csv, ids.ground_row, data.n_ground);
  data.surveyed = mi.mask;
  data.first_year = mi.first_year;
  data.n_years = mi.n_years;
  if (designs.first_year != data.first_year || designs.n_years != data.n_years)
    throw DataError("ground: design year range does not match the survey mask");
  data.areas = geometry.areas_ground;
  data.w = designs.ground_w;
  data.w_names = designs.xl_names;

  CsvTable t = CsvTable::read_file(counts_csv);
  std::map<std::tuple<int, int, long>, std::vector<std::pair<long, long>>> visits;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const long site = t.cell_long(r, "site_id");
    const auto it = ids.ground_row.find(site);
    if (it == ids.ground_row.end())
      throw DataError("ground counts: unknown site_id " + std::to_string(site));
    const int tt = int(t.cell_long(r, "year")) - data.first_year;
    visits[{it->second, tt, t.cell_long(r, "lek_id")}].emplace_back(
        t.cell_long(r, "visit"), t.cell_long(r, "males_flushed"));
  }
  for (auto& [key, rows] : visits) {
    GroundLek lek;
    lek.site = std::get<0>(key);
    lek.t = std::get<1>(key);
    lek.lek_id = std::get<2>(key);
    std::sort(rows.begin(), rows.end());
    for (const auto& [visit, count] : rows) lek.counts.push_back(count);
    data.leks.push_back(std::move(lek));
  }
  data.finalize();
  return data;
}

// --- writers -------------------------------------------------------------------

void write_geometry(const std::string& geometry_csv, const std::string& adjacency_csv,
                    const SurveyGeometry& geometry, const IdMaps& ids) {
  CsvTable t({"region_id", "kind", "x_m", "y_m", "area_km2"});
  for (int i = 0; i < geometry.n_aerial; ++i)
    t.append_row({std::to_string(ids.aerial_ids[i]), "aerial",
                  CsvTable::format_double(geometry.centroids(i, 0)),
                  CsvTable::format_double(geometry.centroids(i, 1)),
                  CsvTable::format_double(geometry.block_area_aerial)});
  for (int s = 0; s < geometry.n_ground; ++s)
    t.append_row({std::to_string(ids.ground_ids[s]), "ground",
                  CsvTable::format_double(geometry.centroids(geometry.n_aerial + s, 0)),
                  CsvTable::format_double(geometry.centroids(geometry.n_aerial + s, 1)),
                  CsvTable::format_double(geometry.areas_ground(s))});
  t.write_file(geometry_csv);

  CsvTable adj({"block_id_a", "block_id_b"});
  for (int i = 0; i < geometry.n_aerial; ++i)
    for (int j = i + 1; j < geometry.n_aerial; ++j)
      if (geometry.adjacency(i, j) != 0.0)
        adj.append_row({std::to_string(ids.aerial_ids[i]),
                        std::to_string(ids.aerial_ids[j])});
  adj.write_file(adjacency_csv);
}

void write_covariates(const std::string& covariate_csv, const std::string& pdsi_csv,
                      const std::string& overlap_csv, const CovariateTable& table,
                      const IdMaps& ids, int first_year, int n_years) {
  CsvTable cov({"block_id", "ecoregion", "development", "crp", "grass_patch",
                "shrub", "woodland"});
  for (std::size_t i = 0; i < ids.aerial_ids.size(); ++i) {
    std::vector<std::string> row{std::to_string(ids.aerial_ids[i]),
                                 table.ecoregion[i]};
    for (arma::uword k = 0; k < table.statics.n_cols; ++k)
      row.push_back(CsvTable::format_double(table.statics(i, k)));
    cov.append_row(row);
  }
  cov.write_file(covariate_csv);

  CsvTable pd({"division_id", "year", "pdsi"});
  for (int year = first_year - 1; year < first_year + n_years; ++year) {
    std::set<long> divisions(table.block_division.begin(), table.block_division.end());
    for (long div : divisions) {
      const auto it = table.pdsi.find({div, year});
      if (it != table.pdsi.end())
        pd.append_row({std::to_string(div), std::to_string(year),
                       CsvTable::format_double(it->second)});
    }
  }
  pd.write_file(pdsi_csv);

  CsvTable ov({"site_id", "block_id", "weight"});
  for (std::size_t s = 0; s < table.overlap.size(); ++s)
    for (const auto& [block_row, w] : table.overlap[s])
      ov.append_row({std::to_string(ids.ground_ids[s]),
                     std::to_string(ids.aerial_ids[block_row]),
                     CsvTable::format_double(w)});
  ov.write_file(overlap_csv);
}

void write_mask(const std::string& mask_csv, const arma::imat& mask,
                const std::vector<long>& ids, int first_year) {
  CsvTable t({"region_id", "year", "surveyed"});
  for (arma::uword i = 0; i < mask.n_rows; ++i)
    for (arma::uword c = 0; c < mask.n_cols; ++c)
      t.append_row({std::to_string(ids[i]), std::to_string(first_year + int(c)),
                    mask(i, c) ? "1" : "0"});
  t.write_file(mask_csv);
}

void write_aerial_detections(const std::string& detections_csv,
                             const AerialDataset& data, const IdMaps& ids) {
  CsvTable t({"region_id", "year", "group_id", "v", "d_m", "side", "count"});
  for (const AerialGroup& g : data.groups)
    t.append_row({std::to_string(ids.aerial_ids[g.block]),
                  std::to_string(data.first_year + g.t), std::to_string(g.group_id),
                  std::to_string(g.v), CsvTable::format_double(g.d),
                  std::to_string(g.side), std::to_string(g.count)});
  t.write_file(detections_csv);
}

void write_ground_counts(const std::string& counts_csv, const GroundDataset& data,
                         const IdMaps& ids) {
  CsvTable t({"site_id", "year", "lek_id", "visit", "males_flushed"});
  for (const GroundLek& lek : data.leks)
    for (std::size_t j = 0; j < lek.counts.size(); ++j)
      t.append_row({std::to_string(ids.ground_ids[lek.site]),
                    std::to_string(data.first_year + lek.t),
                    std::to_string(lek.lek_id), std::to_string(j + 1),
                    std::to_string(lek.counts[j])});
  t.write_file(counts_csv);
}

}  // namespace meld
