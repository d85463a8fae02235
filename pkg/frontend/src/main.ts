import { ApiClient } from './api.js';
import { AnnotatorApp } from './app.js';
import { SubmissionQueue } from './queue.js';

const app = new AnnotatorApp(document, new ApiClient(''), new SubmissionQueue(window.localStorage));
void app.start();
