#!/usr/bin/env node
import { runFigure } from "../src/cli.js";
import { renderAnchorMapFromText } from "../src/anchor.js";

process.exit(runFigure("figure-anchor", renderAnchorMapFromText, process.argv.slice(2)));
