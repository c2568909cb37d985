/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_merge_free: (a: number, b: number) => void;
export const __wbg_similarity_free: (a: number, b: number) => void;
export const hashObject: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const merge3: (a: number, b: number, c: number, d: number, e: number, f: number) => number;
export const merge_clean: (a: number) => number;
export const merge_conflicts: (a: number) => number;
export const merge_text: (a: number) => [number, number];
export const similarity: (a: number, b: number, c: number, d: number) => number;
export const similarity_band: (a: number) => [number, number];
export const similarity_score: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
