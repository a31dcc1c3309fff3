/**
 * Command-line entry: serve a backend over the wire protocol.
 *
 * The bind endpoint comes from --endpoint (host:port), the
 * PANOSPHERE_ENDPOINT environment variable, or --host/--port; port 0 binds
 * an ephemeral port and the chosen one is printed on stdout.
 */

import { parseArgs } from "node:util";

import { makeBackend } from "./backends.js";
import { serve } from "./server.js";

function splitEndpoint(endpoint: string): { host: string; port: number } {
  const cut = endpoint.lastIndexOf(":");
  const host = cut < 0 ? "" : endpoint.slice(0, cut);
  const port = Number(endpoint.slice(cut + 1));
  if (!host || !Number.isInteger(port) || port < 0 || port > 65535) {
    throw new Error(`endpoint must look like host:port, got '${endpoint}'`);
  }
  return { host, port };
}

async function main(): Promise<number> {
  const { values } = parseArgs({
    options: {
      host: { type: "string", default: "127.0.0.1" },
      port: { type: "string", default: "7431" },
      endpoint: { type: "string" },
      backend: { type: "string", default: "echo" },
      help: { type: "boolean", default: false },
    },
  });
  if (values.help) {
    console.log(
      "usage: main.js [--endpoint host:port | --host H --port P] " +
        "[--backend echo|stub-scheduler|external:<module>]",
    );
    return 0;
  }
  let host = values.host as string;
  let port = Number(values.port);
  const endpoint = (values.endpoint as string | undefined) ?? process.env.PANOSPHERE_ENDPOINT;
  if (endpoint) {
    ({ host, port } = splitEndpoint(endpoint));
  }
  if (!Number.isInteger(port) || port < 0 || port > 65535) {
    throw new Error(`port must be an integer in [0, 65535], got '${values.port}'`);
  }
  const backend = await makeBackend(values.backend as string);
  const handle = await serve(backend, host, port);
  console.log(`serving ${backend.kind} on ${handle.endpoint}`);
  const shutdown = () => {
    void handle.close().then(() => process.exit(0));
  };
  process.on("SIGINT", shutdown);
  process.on("SIGTERM", shutdown);
  return new Promise<number>(() => {}); // run until a signal arrives
}

main().catch((exc) => {
  console.error(`error: ${exc instanceof Error ? exc.message : exc}`);
  process.exit(1);
});
