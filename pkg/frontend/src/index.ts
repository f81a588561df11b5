export { buildChart, seriesColor } from "./chart.js";
export type { ChartOpts, Series } from "./chart.js";
export {
  CsvFormatError,
  magnitude,
  parseLedgerCsv,
  parseSeriesCsv,
} from "./csv.js";
export type { ComplexSeries, LedgerTable, SeriesTable } from "./csv.js";
export { FIGURES, FIGURE_NAMES, logLogSlope } from "./figures.js";
export type { Figure, FigureFn } from "./figures.js";
export { render } from "./render.js";
export type { PlotSpec } from "./render.js";
export { main } from "./cli.js";
