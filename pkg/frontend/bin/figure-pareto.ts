#!/usr/bin/env node
import { runFigure } from "../src/cli.js";
import { renderParetoFromText } from "../src/pareto.js";

process.exit(runFigure("figure-pareto", renderParetoFromText, process.argv.slice(2)));
