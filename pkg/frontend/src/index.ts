export * from "./views.js";
export * from "./api.js";
export * from "./viewport.js";
export * from "./renderer.js";
export * from "./queryBuilder.js";
export * from "./app.js";
