import { LensClient } from "./api";
import { WhatIfApp } from "./app";

const root = document.getElementById("app");
if (root) {
  const app = new WhatIfApp(root, new LensClient(""));
  void app.init();
}
