#!/usr/bin/env node
import * as fs from 'node:fs';
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';
import { parseManifest, type ModelManifest } from './manifest.js';
import { readSafetensors } from './safetensors.js';
import { exportCheckpoint, extractFfnTriple, type NameMapping } from './export.js';

function loadManifest(path: string): ModelManifest {
  return parseManifest(fs.readFileSync(path, 'utf-8'));
}

await yargs(hideBin(process.argv))
  .scriptName('sparseglu-export')
  .command(
    'export',
    'convert a safetensors checkpoint to a GSPT container + manifest',
    (y) =>
      y
        .option('source', { type: 'string', demandOption: true, describe: 'safetensors checkpoint' })
        .option('manifest', { type: 'string', demandOption: true, describe: 'target manifest JSON' })
        .option('mapping', { type: 'string', describe: 'JSON name-mapping table (target -> source)' })
        .option('out-container', { type: 'string', demandOption: true })
        .option('out-manifest', { type: 'string', demandOption: true }),
    (args) => {
      const mapping: NameMapping | undefined = args.mapping
        ? JSON.parse(fs.readFileSync(args.mapping, 'utf-8'))
        : undefined;
      const result = exportCheckpoint({
        source: readSafetensors(fs.readFileSync(args.source)),
        mapping,
        manifest: loadManifest(args.manifest),
      });
      fs.writeFileSync(args.outContainer, result.container);
      fs.writeFileSync(args.outManifest, result.manifestJson);
      console.log(`wrote ${args.outContainer} (${result.container.length} bytes)`);
    }
  )
  .command(
    'extract-ffn',
    'extract one layer\'s FFN weight triple into a standalone container',
    (y) =>
      y
        .option('container', { type: 'string', demandOption: true })
        .option('manifest', { type: 'string', demandOption: true })
        .option('layer', { type: 'number', demandOption: true })
        .option('out', { type: 'string', demandOption: true }),
    (args) => {
      const triple = extractFfnTriple(
        fs.readFileSync(args.container),
        loadManifest(args.manifest),
        args.layer
      );
      fs.writeFileSync(args.out, triple);
      console.log(`wrote ${args.out} (${triple.length} bytes)`);
    }
  )
  .demandCommand(1)
  .strict()
  .fail((msg, err) => {
    console.error(err ? `${err.name}: ${err.message}` : msg);
    process.exit(err ? 3 : 2);
  })
  .parseAsync();
