// The environment provides express and yargs as plain-JS globals without
// their @types packages; treat them as untyped.
declare module "express";
declare module "yargs";
declare module "yargs/helpers";
declare module "@xenova/transformers";
