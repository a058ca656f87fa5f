#!/usr/bin/env node
import { runFigure } from "../src/cli.js";
import { renderLayerProfileFromText } from "../src/layers.js";

process.exit(runFigure("figure-layers", renderLayerProfileFromText, process.argv.slice(2)));
