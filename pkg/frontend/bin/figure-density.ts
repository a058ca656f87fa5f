#!/usr/bin/env node
import { runFigure } from "../src/cli.js";
import { renderDensityFromText } from "../src/density.js";

process.exit(runFigure("figure-density", renderDensityFromText, process.argv.slice(2)));
